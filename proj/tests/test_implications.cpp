#include <gtest/gtest.h>

#include <random>

#include "cidag/implications.hpp"
#include "test_support.hpp"

using namespace cidag;

namespace {

IndependenceClaim claim(std::string x, std::string y, VarSet z) {
    return claim_canonicalize({std::move(x), std::move(y), std::move(z)});
}

} // namespace

TEST(ClaimCanonicalize, OrdersEndpointsAndConditioning) {
    EXPECT_EQ(claim_canonicalize({"B", "A", {"Z2", "Z1"}}), (IndependenceClaim{"A", "B", {"Z1", "Z2"}}));
    IndependenceClaim canonical{"A", "B", {"Z1", "Z2"}};
    EXPECT_EQ(claim_canonicalize(canonical), canonical);
    EXPECT_THROW(claim_canonicalize({"A", "A", {}}), InvalidArgument);
    EXPECT_THROW(claim_canonicalize({"A", "B", {"A"}}), InvalidArgument);
}

TEST(ImpliedIndependencies, Chain) {
    auto h = implied_independencies(parse_dag("A -> B\nB -> C"));
    EXPECT_EQ(h.claims, (std::vector<IndependenceClaim>{{"A", "C", {"B"}}}));
}

TEST(ImpliedIndependencies, LatentOnlyPairsReportedSeparately) {
    auto h = implied_independencies(parse_dag("latent U\nU -> A\nU -> B\nA -> C"));
    EXPECT_EQ(h.claims, (std::vector<IndependenceClaim>{{"B", "C", {"A"}}}));
    ASSERT_EQ(h.latent_only.size(), 1u);
    EXPECT_EQ(h.latent_only[0].x, "A");
    EXPECT_EQ(h.latent_only[0].y, "B");
}

TEST(ImpliedIndependencies, DataValidatedFixtureMatchesPublishedTable) {
    auto h = implied_independencies(support::load_fixture("data_validated.dag"));
    std::vector<IndependenceClaim> expected{
        claim("Age", "MergeConflicts", {"CommitFrequency", "CI"}),
        claim("BugReport", "MergeConflicts", {"CommitFrequency", "CI"}),
        claim("Communication", "MergeConflicts", {"CommitFrequency", "CI"}),
        claim("MergeConflicts", "TestsVolume", {"CommitFrequency", "CI"}),
    };
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(h.claims, expected);
}

TEST(ImpliedIndependencies, LiteratureFixtureMatchesPublishedTable) {
    auto h = implied_independencies(support::load_fixture("literature.dag"));
    std::vector<IndependenceClaim> expected{
        claim("Age", "CommitFrequency", {"CI"}),
        claim("Age", "TestsVolume", {"CI"}),
        claim("Age", "Communication", {"CI"}),
        claim("Age", "MergeConflicts", {"CI"}),
        claim("BugReport", "CommitFrequency", {"Communication", "CI", "TestsVolume"}),
        claim("BugReport", "MergeConflicts", {"CommitFrequency", "CI"}),
        claim("BugReport", "MergeConflicts", {"Communication", "TestsVolume", "CI"}),
        claim("Communication", "MergeConflicts", {"CommitFrequency", "CI"}),
        claim("Communication", "TestsVolume", {"CI"}),
        claim("MergeConflicts", "TestsVolume", {"CommitFrequency", "CI"}),
    };
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(h.claims, expected);
    ASSERT_EQ(h.latent_only.size(), 1u);
    EXPECT_EQ(h.latent_only[0].x, "CommitFrequency");
    EXPECT_EQ(h.latent_only[0].y, "Communication");
}

TEST(ImpliedIndependencies, SoundCompleteDeterministic) {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 150; ++trial) {
        auto dag = support::random_dag(rng, 8, 0.3);
        auto spec = dag.spec();
        spec.variables[static_cast<std::size_t>(trial) % spec.variables.size()].kind = VariableKind::latent;
        dag = CausalDag(spec);
        auto h = implied_independencies(dag);
        EXPECT_TRUE(std::is_sorted(h.claims.begin(), h.claims.end()));
        for (const auto& c : h.claims) {
            EXPECT_TRUE(is_d_separated(dag, {c.x}, {c.y}, c.conditioning));
            EXPECT_LT(c.x, c.y);
            for (const auto& z : c.conditioning) EXPECT_FALSE(dag.is_latent(z));
        }
        // every non-adjacent observed pair is either claimed or latent-only
        auto observed = dag.observed_names();
        for (std::size_t i = 0; i < observed.size(); ++i) {
            for (std::size_t j = i + 1; j < observed.size(); ++j) {
                bool adj = dag.adjacent(dag.index(observed[i]), dag.index(observed[j]));
                bool claimed = std::any_of(h.claims.begin(), h.claims.end(), [&](const IndependenceClaim& c) {
                    return c.x == observed[i] && c.y == observed[j];
                });
                bool latent = std::any_of(h.latent_only.begin(), h.latent_only.end(), [&](const UnseparablePair& p) {
                    return p.x == observed[i] && p.y == observed[j];
                });
                EXPECT_EQ(!adj, claimed || latent);
                EXPECT_FALSE(claimed && latent);
            }
        }
        EXPECT_EQ(to_json(implied_independencies(dag)).dump(), to_json(h).dump());
    }
}
