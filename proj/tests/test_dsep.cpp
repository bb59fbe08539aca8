#include <gtest/gtest.h>

#include <random>

#include "cidag/dsep.hpp"
#include "test_support.hpp"

using namespace cidag;

namespace {

const auto fork_dag = "Fire -> Heat\nFire -> Smoke";
const auto collider_dag = "Humidity -> Heat\nFire -> Heat";
const auto chain_dag = "Fire -> Smoke\nSmoke -> Smell";

} // namespace

TEST(EnumeratePaths, ForkHasOnePath) {
    auto dag = parse_dag(fork_dag);
    auto paths = enumerate_paths(dag, "Heat", "Smoke");
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_EQ(paths[0].nodes, (std::vector<std::string>{"Heat", "Fire", "Smoke"}));
    EXPECT_EQ(paths[0].directions, (std::vector<Step>{Step::backward, Step::forward}));
}

TEST(EnumeratePaths, DisconnectedAndDiamond) {
    auto dag = parse_dag("A -> B\nnode X");
    EXPECT_TRUE(enumerate_paths(dag, "A", "X").empty());
    auto diamond = parse_dag("A -> B\nB -> D\nA -> C\nC -> D");
    auto paths = enumerate_paths(diamond, "A", "D");
    ASSERT_EQ(paths.size(), 2u);
    EXPECT_EQ(paths[0].nodes, (std::vector<std::string>{"A", "B", "D"}));
    EXPECT_EQ(paths[1].nodes, (std::vector<std::string>{"A", "C", "D"}));
    EXPECT_THROW(enumerate_paths(diamond, "A", "A"), InvalidArgument);
    EXPECT_THROW(enumerate_paths(diamond, "A", "Q"), UnknownVariable);
}

TEST(EnumeratePaths, LimitIsEnforced) {
    // Complete DAG on 8 nodes has 1957 simple paths between its endpoints.
    DagSpec spec;
    for (int i = 0; i < 8; ++i) spec.variables.push_back({"N" + std::to_string(i)});
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j) spec.edges.push_back({"N" + std::to_string(i), "N" + std::to_string(j)});
    CausalDag dag(spec);
    EXPECT_EQ(enumerate_paths(dag, "N0", "N7").size(), 1957u);
    EXPECT_THROW(enumerate_paths(dag, "N0", "N7", 100), Error);
}

TEST(PathStatus, ChainBlockedByMiddle) {
    auto dag = parse_dag(chain_dag);
    auto path = enumerate_paths(dag, "Fire", "Smell").at(0);
    EXPECT_TRUE(path_status(dag, path, {}).open);
    auto status = path_status(dag, path, {"Smoke"});
    EXPECT_FALSE(status.open);
    EXPECT_EQ(status.blocking_nodes, (VarSet{"Smoke"}));
}

TEST(PathStatus, ColliderOpensWhenConditioned) {
    auto dag = parse_dag(collider_dag);
    auto path = enumerate_paths(dag, "Humidity", "Fire").at(0);
    auto closed = path_status(dag, path, {});
    EXPECT_FALSE(closed.open);
    EXPECT_EQ(closed.blocking_nodes, (VarSet{"Heat"}));
    auto opened = path_status(dag, path, {"Heat"});
    EXPECT_TRUE(opened.open);
    EXPECT_EQ(opened.colliders_opened, (VarSet{"Heat"}));

    auto with_child = parse_dag("Humidity -> Heat\nFire -> Heat\nHeat -> Alarm");
    auto p2 = enumerate_paths(with_child, "Humidity", "Fire").at(0);
    EXPECT_TRUE(path_status(with_child, p2, {"Alarm"}).open);
}

TEST(PathStatus, SingleEdgeAlwaysOpen) {
    auto dag = parse_dag("X -> Y\nnode Z");
    auto path = enumerate_paths(dag, "X", "Y").at(0);
    EXPECT_TRUE(path_status(dag, path, {}).open);
    EXPECT_TRUE(path_status(dag, path, {"Z"}).open);
}

TEST(PathStatus, InvalidPathRejected) {
    auto dag = parse_dag(chain_dag);
    Path bogus{{"Fire", "Smell"}, {Step::forward}};
    EXPECT_THROW(path_status(dag, bogus, {}), InvalidArgument);
    Path wrong_dir{{"Fire", "Smoke"}, {Step::backward}};
    EXPECT_THROW(path_status(dag, wrong_dir, {}), InvalidArgument);
}

TEST(DSeparation, ForkAndCollider) {
    auto f = parse_dag(fork_dag);
    EXPECT_TRUE(is_d_separated(f, {"Heat"}, {"Smoke"}, {"Fire"}));
    EXPECT_FALSE(is_d_separated(f, {"Heat"}, {"Smoke"}, {}));
    auto c = parse_dag(collider_dag);
    EXPECT_TRUE(is_d_separated(c, {"Humidity"}, {"Fire"}, {}));
    EXPECT_FALSE(is_d_separated(c, {"Humidity"}, {"Fire"}, {"Heat"}));
}

TEST(DSeparation, Errors) {
    auto f = parse_dag(fork_dag);
    EXPECT_THROW(is_d_separated(f, {"Heat"}, {"Heat"}, {}), InvalidArgument);
    EXPECT_THROW(is_d_separated(f, {"Heat"}, {"Smoke"}, {"Heat"}), InvalidArgument);
    EXPECT_THROW(is_d_separated(f, {"Heat"}, {"Ghost"}, {}), UnknownVariable);
}

TEST(DSeparation, AgreesWithPathOracleAndIsSymmetric) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 150; ++trial) {
        auto dag = support::random_dag(rng, 2 + trial % 7, 0.35);
        const auto& vars = dag.variables();
        for (std::size_t a = 0; a < vars.size(); ++a) {
            for (std::size_t b = a + 1; b < vars.size(); ++b) {
                for (unsigned mask = 0; mask < (1u << vars.size()); ++mask) {
                    if (mask & ((1u << a) | (1u << b))) continue;
                    VarSet z;
                    for (std::size_t k = 0; k < vars.size(); ++k)
                        if (mask & (1u << k)) z.push_back(vars[k].name);
                    const auto& x = vars[a].name;
                    const auto& y = vars[b].name;
                    bool fast = is_d_separated(dag, {x}, {y}, z);
                    ASSERT_EQ(fast, support::separated_by_paths(dag, x, y, z)) << serialize_dag(dag);
                    ASSERT_EQ(fast, is_d_separated(dag, {y}, {x}, z));
                }
            }
        }
    }
}

TEST(DSeparation, LocalMarkovCondition) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto dag = support::random_dag(rng, 8, 0.3);
        for (const auto& v : dag.variables()) {
            auto parents = relatives(dag, v.name, Relation::parents);
            auto desc = relatives(dag, v.name, Relation::descendants);
            VarSet others;
            for (const auto& u : dag.variables()) {
                if (u.name == v.name) continue;
                if (std::binary_search(parents.begin(), parents.end(), u.name)) continue;
                if (std::binary_search(desc.begin(), desc.end(), u.name)) continue;
                others.push_back(u.name);
            }
            if (others.empty()) continue;
            EXPECT_TRUE(is_d_separated(dag, {v.name}, others, parents));
        }
    }
}

TEST(BackdoorPaths, SparkConfounder) {
    auto dag = parse_dag("Spark -> Fire\nSpark -> Smoke\nFire -> Smoke");
    auto paths = backdoor_paths(dag, "Fire", "Smoke");
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_EQ(paths[0].nodes, (std::vector<std::string>{"Fire", "Spark", "Smoke"}));
}

TEST(BackdoorPaths, ExposureWithoutParents) {
    auto dag = parse_dag("A -> B\nB -> C\nA -> C");
    EXPECT_TRUE(backdoor_paths(dag, "A", "C").empty());
}

TEST(BackdoorPaths, LiteratureFixtureAgePath) {
    auto dag = support::load_fixture("literature.dag");
    auto paths = backdoor_paths(dag, "CI", "BugReport");
    ASSERT_FALSE(paths.empty());
    EXPECT_NE(std::find_if(paths.begin(), paths.end(),
                           [](const Path& p) {
                               return p.nodes == std::vector<std::string>{"CI", "Age", "BugReport"};
                           }),
              paths.end());
    for (const auto& p : paths) EXPECT_EQ(p.nodes[1], "Age");
}

TEST(AdjustmentSets, SingleConfounderAndNoBackdoor) {
    auto dag = parse_dag("Spark -> Fire\nSpark -> Smoke\nFire -> Smoke");
    auto r = minimal_adjustment_sets(dag, "Fire", "Smoke");
    EXPECT_TRUE(r.admissible);
    EXPECT_EQ(r.sets, (std::vector<VarSet>{{"Spark"}}));

    auto plain = parse_dag("A -> B\nB -> C");
    auto r2 = minimal_adjustment_sets(plain, "A", "C");
    EXPECT_TRUE(r2.admissible);
    EXPECT_EQ(r2.sets, (std::vector<VarSet>{VarSet{}}));
}

TEST(AdjustmentSets, LatentConfounderIsInadmissible) {
    auto dag = parse_dag("latent U\nU -> X\nU -> Y\nX -> Y");
    auto r = minimal_adjustment_sets(dag, "X", "Y");
    EXPECT_FALSE(r.admissible);
    EXPECT_TRUE(r.sets.empty());
}

TEST(AdjustmentSets, MultipleMinimalSets) {
    // Two routes into the exposure: either {A} or {B, C} blocks everything.
    auto dag = parse_dag("A -> X\nA -> Y\nX -> Y\nB -> A\nC -> A");
    auto r = minimal_adjustment_sets(dag, "X", "Y");
    EXPECT_EQ(r.sets, (std::vector<VarSet>{{"A"}}));
    auto m = parse_dag("B -> X\nB -> A\nC -> A\nC -> Y\nX -> Y");
    // M-structure: {} works, conditioning on A alone reopens it.
    EXPECT_EQ(minimal_adjustment_sets(m, "X", "Y").sets, (std::vector<VarSet>{VarSet{}}));
}

TEST(AdjustmentSets, BlockEveryBackdoorPath) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 150; ++trial) {
        auto dag = support::random_dag(rng, 7, 0.35);
        for (const auto& e : dag.edges()) {
            auto r = minimal_adjustment_sets(dag, e.from, e.to);
            auto paths = backdoor_paths(dag, e.from, e.to);
            for (const auto& s : r.sets)
                for (const auto& p : paths) EXPECT_FALSE(path_status(dag, p, s).open);
        }
    }
}

TEST(MinimalSeparator, BasicShapes) {
    EXPECT_EQ(find_minimal_separator(parse_dag("A -> B\nB -> C"), "A", "C"), (VarSet{"B"}));
    EXPECT_EQ(find_minimal_separator(parse_dag("A -> B\nC -> B"), "A", "C"), VarSet{});
    EXPECT_THROW(find_minimal_separator(parse_dag("A -> B"), "A", "B"), InvalidArgument);
    EXPECT_EQ(find_minimal_separator(parse_dag("latent U\nA -> U\nU -> C"), "A", "C"), std::nullopt);
    EXPECT_EQ(find_minimal_separator(parse_dag("latent U\nA -> U\nU -> C"), "A", "C", VarSet{"U"}), (VarSet{"U"}));
}

TEST(MinimalSeparator, DataValidatedAgeMergeConflicts) {
    auto dag = support::load_fixture("data_validated.dag");
    EXPECT_EQ(find_minimal_separator(dag, "Age", "MergeConflicts"), (VarSet{"CI", "CommitFrequency"}));
}

TEST(MinimalSeparator, IsInclusionMinimal) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto dag = support::random_dag(rng, 8, 0.3);
        for (std::size_t a = 0; a < dag.size(); ++a) {
            for (std::size_t b = a + 1; b < dag.size(); ++b) {
                if (dag.adjacent(a, b)) continue;
                auto seps = all_minimal_separators(dag, dag.name(a), dag.name(b));
                ASSERT_FALSE(seps.empty());
                EXPECT_EQ(seps.front(), *find_minimal_separator(dag, dag.name(a), dag.name(b)));
                for (const auto& s : seps) {
                    EXPECT_TRUE(is_d_separated(dag, {dag.name(a)}, {dag.name(b)}, s));
                    for (std::size_t drop = 0; drop < s.size(); ++drop) {
                        auto smaller = s;
                        smaller.erase(smaller.begin() + static_cast<long>(drop));
                        EXPECT_FALSE(is_d_separated(dag, {dag.name(a)}, {dag.name(b)}, smaller));
                    }
                }
            }
        }
    }
}
