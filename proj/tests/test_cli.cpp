#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cidag/cli.hpp"
#include "cidag/synthetic.hpp"
#include "test_support.hpp"

using namespace cidag;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args, const std::string& input = "") {
    std::vector<const char*> argv{"cidag"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::istringstream in(input);
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
    return {code, out.str(), err.str()};
}

class CliFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("cidag_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        write("chain.dag", "a -> b\nb -> c\n");
        write("collider.dag", "a -> b\nc -> b\n");
        write("cyclic.dag", "a -> b\nb -> c\nc -> a\n");
        write("chain.csv", to_csv(simulate_linear_gaussian(parse_dag("a -> b\nb -> c\n"), 300, 5)));
    }
    void TearDown() override { fs::remove_all(dir); }

    void write(const std::string& name, const std::string& text) { std::ofstream(dir / name) << text; }
    std::string at(const std::string& name) const { return (dir / name).string(); }

    fs::path dir;
};

} // namespace

TEST_F(CliFiles, Validate) {
    auto ok = cli({"validate", support::fixture_path("literature.dag")});
    EXPECT_EQ(ok.code, 0);
    EXPECT_NE(ok.out.find("valid"), std::string::npos);
    auto bad = cli({"validate", at("cyclic.dag")});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("cycle"), std::string::npos);
    EXPECT_TRUE(bad.out.empty());
}

TEST(Cli, ImplicationsDataValidated) {
    auto r = cli({"implications", support::fixture_path("data_validated.dag"), "--format", "table"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("H4. "), std::string::npos);
    EXPECT_EQ(r.out.find("H5. "), std::string::npos);
    auto j = ordered_json::parse(cli({"implications", support::fixture_path("data_validated.dag"), "--format", "json"}).out);
    EXPECT_EQ(j["claims"].size(), 4u);
}

TEST(Cli, AdjustPrintsLibrarySets) {
    const auto path = support::fixture_path("literature.dag");
    auto r = cli({"adjust", path, "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = ordered_json::parse(r.out);
    auto dag = parse_dag(support::read_file(path));
    auto lib = minimal_adjustment_sets(dag, "CI", "BugReport");
    EXPECT_EQ(j["exposure"], "CI");
    EXPECT_EQ(j["outcome"], "BugReport");
    EXPECT_EQ(j["adjustment_sets"].get<std::vector<VarSet>>(), lib.sets);
    auto custom = cli({"adjust", path, "--exposure", "Age", "--outcome", "BugReport"});
    EXPECT_EQ(custom.code, 0);
}

TEST_F(CliFiles, UsageErrors) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"implications"}).code, 2);
    EXPECT_EQ(cli({"implications", at("missing.dag")}).code, 2);
    EXPECT_EQ(cli({"implications", at("chain.dag"), "--format", "xml"}).code, 2);
    EXPECT_EQ(cli({"test", at("chain.dag"), at("chain.csv"), "--alpha", "2"}).code, 2);
    EXPECT_EQ(cli({"test", at("chain.dag"), at("chain.csv"), "--permutations", "5"}).code, 2);
    EXPECT_EQ(cli({"adjust", at("chain.dag")}).code, 2);  // no exposure marked
    auto help = cli({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("refine"), std::string::npos);
}

TEST_F(CliFiles, TestCommand) {
    auto ok = cli({"test", at("chain.dag"), at("chain.csv"), "--permutations", "199", "--json-out", at("out.json")});
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_NE(ok.out.find("fail to reject"), std::string::npos);
    auto saved = ordered_json::parse(support::read_file(at("out.json")));
    EXPECT_EQ(saved["summary"]["passed"], 1);

    auto failed = cli({"test", at("collider.dag"), at("chain.csv"), "--permutations", "199", "--format", "json"});
    EXPECT_EQ(failed.code, 1);
    auto j = ordered_json::parse(failed.out);
    EXPECT_EQ(j["results"][0]["decision"], "reject_independence");

    auto seeded = cli({"test", at("collider.dag"), at("chain.csv"), "--permutations", "199", "--format", "json"});
    EXPECT_EQ(seeded.out, failed.out);
}

TEST_F(CliFiles, RefineAutomaticAndInteractive) {
    auto a = cli({"refine", at("collider.dag"), at("chain.csv"), "--permutations", "199", "--journal", at("j.json")});
    EXPECT_EQ(a.code, 0) << a.err;
    EXPECT_NE(a.out.find("Applied (auto)"), std::string::npos);
    auto journal = ordered_json::parse(support::read_file(at("j.json")));
    EXPECT_EQ(journal["status"], "consistent");

    auto h = cli({"refine", at("collider.dag"), at("chain.csv"), "--permutations", "199", "--interactive"}, "x\n0\n");
    EXPECT_EQ(h.code, 0) << h.err;
    EXPECT_NE(h.out.find("Applied (human)"), std::string::npos);
    EXPECT_NE(h.err.find("not a valid choice"), std::string::npos);
    EXPECT_NE(h.err.find("[0]"), std::string::npos);

    auto q = cli({"refine", at("collider.dag"), at("chain.csv"), "--permutations", "199", "--interactive"}, "q\n");
    EXPECT_EQ(q.code, 1);
    EXPECT_NE(q.out.find("Aborted"), std::string::npos);
}

TEST_F(CliFiles, Ingest) {
    auto r = cli({"ingest", support::fixture_path("repo/release_metrics.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto t = parse_csv(r.out);
    EXPECT_EQ(t.row_count(), 12u);
    EXPECT_EQ(t.names(), metric_columns());
    EXPECT_NE(r.err.find("travis"), std::string::npos);
    auto f = cli({"ingest", support::fixture_path("repo/release_metrics.jsonl"), "-o", at("m.csv")});
    EXPECT_EQ(f.code, 0);
    EXPECT_EQ(load_csv(at("m.csv")).matrix(), t.matrix());
    auto bad = cli({"ingest", support::fixture_path("repo/merge_history.jsonl")});
    EXPECT_EQ(bad.code, 1);  // no CI date and no alignment start
}

TEST(Report, EmptyResultsGiveHeaderOnly) {
    auto rep = render_report(std::vector<TestResult>{});
    EXPECT_EQ(rep.text.rfind("Independence tests: 0 claims", 0), 0u);
    EXPECT_EQ(rep.text.find("* p <"), std::string::npos);
    EXPECT_EQ(rep.text.find("H1"), std::string::npos);
    EXPECT_EQ(rep.json["results"].size(), 0u);
}

TEST(Report, FourRowTable) {
    auto dag = support::load_fixture("data_validated.dag");
    std::vector<TestResult> results;
    for (const auto& c : implied_independencies(dag).claims) {
        TestResult r;
        r.claim = c;
        r.method = TestMethod::kernel_conditional;
        r.statistic = 0.5;
        r.p_value = 0.4;
        results.push_back(r);
    }
    auto text = render_report(results).text;
    std::size_t rows = 0;
    for (std::size_t pos = 0; (pos = text.find("fail to reject", pos)) != std::string::npos; ++pos) ++rows;
    EXPECT_EQ(rows, 4u);
    EXPECT_NE(text.find("H4"), std::string::npos);
    EXPECT_EQ(render_report(results).text, text);
}

TEST(Report, SessionNarrativeNamesEdge) {
    auto truth = parse_dag("a -> b\nb -> c\n");
    auto hyp = parse_dag("a -> b\nc -> b\n");
    TestConfig cfg;
    cfg.permutations = 199;
    auto s = refine(hyp, simulate_linear_gaussian(truth, 300, 5), cfg);
    ASSERT_TRUE(s.steps[0].applied);
    auto text = render_report(s).text;
    EXPECT_NE(text.find(describe(s.steps[0].applied->edit)), std::string::npos);
    EXPECT_NE(text.find(", 1 edit\n"), std::string::npos);
}
