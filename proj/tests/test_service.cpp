#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include "cidag/cli.hpp"
#include "cidag/service.hpp"
#include "cidag/synthetic.hpp"
#include "test_support.hpp"

using namespace cidag;
namespace fs = std::filesystem;

namespace {

class Server {
public:
    explicit Server(fs::path root = {}) : service(std::move(root)) {
        service.mount(svr);
        port = svr.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }
    ~Server() {
        svr.stop();
        thread.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(120, 0);
        return c;
    }

    Service service;
    httplib::Server svr;
    int port = 0;
    std::thread thread;
};

ordered_json body(const httplib::Result& r) { return ordered_json::parse(r->body); }

std::string post_session(httplib::Client& c, const std::string& dag_text) {
    ordered_json req;
    req["dag"] = dag_text;
    auto r = c.Post("/sessions", req.dump(), "application/json");
    EXPECT_EQ(r->status, 201);
    return body(r)["id"].get<std::string>();
}

fs::path scratch_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("cidag_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const char* chain_text = "a -> b\nb -> c\n";
const char* collider_text = "a -> b\nc -> b\n";

std::string chain_csv() { return to_csv(simulate_linear_gaussian(parse_dag(chain_text), 300, 5)); }

std::string cli_stdout(std::vector<std::string> args) {
    std::vector<const char*> argv{"cidag"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::istringstream in;
    std::ostringstream out, err;
    EXPECT_EQ(run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err), 0) << err.str();
    return out.str();
}

} // namespace

TEST(Service, ImplicationsMatchCliByteForByte) {
    Server srv;
    auto c = srv.client();
    const auto path = support::fixture_path("literature.dag");
    auto id = post_session(c, "");
    ordered_json put;
    put["dag"] = support::read_file(path);
    auto r = c.Put("/sessions/" + id + "/dag", put.dump(), "application/json");
    ASSERT_EQ(r->status, 200);
    auto imp = c.Get("/sessions/" + id + "/implications");
    ASSERT_EQ(imp->status, 200);
    EXPECT_EQ(imp->body, cli_stdout({"implications", path, "--format", "json"}));
    EXPECT_EQ(body(imp)["dag_fingerprint"], body(r)["dag_fingerprint"]);
}

TEST(Service, ErrorsMapToStatusCodes) {
    Server srv;
    auto c = srv.client();
    EXPECT_EQ(c.Get("/sessions/0123abcd")->status, 404);
    EXPECT_EQ(body(c.Get("/sessions/0123abcd"))["error"], "unknown_session");
    EXPECT_EQ(c.Post("/sessions", "{not json", "application/json")->status, 400);
    EXPECT_EQ(body(c.Post("/sessions", "[1]", "application/json"))["error"], "malformed_payload");

    auto id = post_session(c, chain_text);
    ordered_json cyc;
    cyc["dag"] = "a -> b\nb -> a\n";
    auto r = c.Put("/sessions/" + id + "/dag", cyc.dump(), "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body(r)["error"], "cycle");

    ordered_json edit;
    edit["edit"] = {{"kind", "add_edge"}, {"from", "c"}, {"to", "a"}};
    r = c.Post("/sessions/" + id + "/edits", edit.dump(), "application/json");
    EXPECT_EQ(body(r)["error"], "cycle");
    edit["edit"] = {{"kind", "add_edge"}, {"from", "a"}, {"to", "zz"}};
    r = c.Post("/sessions/" + id + "/edits", edit.dump(), "application/json");
    EXPECT_EQ(body(r)["error"], "unknown_variable");

    r = c.Put("/sessions/" + id + "/dataset", "a,b\n1,oops\n", "text/csv");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body(r)["error"], "parse_error");
}

TEST(Service, StaleFingerprintIsAConflict) {
    Server srv;
    auto c = srv.client();
    auto id = post_session(c, chain_text);
    const auto fp0 = body(c.Get("/sessions/" + id))["dag_fingerprint"].get<std::string>();
    ordered_json edit;
    edit["edit"] = {{"kind", "add_edge"}, {"from", "a"}, {"to", "c"}};
    edit["base_fingerprint"] = fp0;
    auto r = c.Post("/sessions/" + id + "/edits", edit.dump(), "application/json");
    ASSERT_EQ(r->status, 200);
    EXPECT_NE(body(r)["dag_fingerprint"], fp0);
    edit["edit"] = {{"kind", "remove_edge"}, {"from", "a"}, {"to", "c"}};
    r = c.Post("/sessions/" + id + "/edits", edit.dump(), "application/json");
    EXPECT_EQ(r->status, 409);
    EXPECT_EQ(body(r)["error"], "fingerprint_mismatch");
}

TEST(Service, EvaluationNeedsDataset) {
    Server srv;
    auto c = srv.client();
    auto id = post_session(c, chain_text);
    auto r = c.Post("/sessions/" + id + "/evaluations", "{}", "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body(r)["error"], "no_dataset");
    r = c.Post("/sessions/" + id + "/refinement", "{}", "application/json");
    EXPECT_EQ(body(r)["error"], "no_dataset");
}

TEST(Service, EvaluationStreamsPerClaimLines) {
    Server srv;
    auto c = srv.client();
    auto id = post_session(c, collider_text);
    auto up = c.Put("/sessions/" + id + "/dataset", chain_csv(), "text/csv");
    ASSERT_EQ(up->status, 200);
    EXPECT_EQ(body(up)["rows"], 300);

    auto run = [&] {
        auto r = c.Post("/sessions/" + id + "/evaluations", R"({"config":{"permutations":199,"seed":3}})",
                        "application/json");
        EXPECT_EQ(r->status, 200);
        std::vector<ordered_json> lines;
        std::istringstream in(r->body);
        for (std::string l; std::getline(in, l);) lines.push_back(ordered_json::parse(l));
        return lines;
    };
    auto lines = run();
    ASSERT_EQ(lines.size(), 2u);  // one claim (a _||_ c) and the summary
    EXPECT_EQ(lines[0]["decision"], "reject_independence");
    EXPECT_EQ(lines[1]["summary"]["failed"], 1);
    const auto fp = body(c.Get("/sessions/" + id))["dag_fingerprint"];
    for (const auto& l : lines) EXPECT_EQ(l["dag_fingerprint"], fp);
    auto again = run();
    EXPECT_EQ(again[0].dump(), lines[0].dump());
}

TEST(Service, RefinementRoundTripAndRestart) {
    const auto root = scratch_dir("service");
    std::string id, fp_after, journal;
    {
        Server srv(root);
        auto c = srv.client();
        id = post_session(c, collider_text);
        ASSERT_EQ(c.Put("/sessions/" + id + "/dataset", chain_csv(), "text/csv")->status, 200);
        auto r = c.Post("/sessions/" + id + "/refinement", R"({"config":{"permutations":199,"seed":1}})",
                        "application/json");
        ASSERT_EQ(r->status, 200);
        EXPECT_EQ(body(r)["pending"], true);

        auto props = c.Get("/sessions/" + id + "/proposals");
        ASSERT_EQ(props->status, 200);
        auto p = body(props);
        const auto fp = p["dag_fingerprint"].get<std::string>();
        const auto& cands = p["diagnosis"]["candidates"];
        ASSERT_GE(cands.size(), 2u);
        for (const auto& cand : cands) {
            EXPECT_TRUE(cand.contains("followup_results"));
            EXPECT_EQ(cand["followup_results"].size(), cand["followup_claims"].size());
        }
        EXPECT_FALSE(body(c.Get("/sessions/" + id + "/proposals?followups=0"))["diagnosis"]["candidates"][0].contains(
            "followup_results"));

        ordered_json stale{{"index", 0}, {"base_fingerprint", "0000000000000000"}};
        EXPECT_EQ(c.Post("/sessions/" + id + "/proposals/choose", stale.dump(), "application/json")->status, 409);
        ordered_json bad{{"index", 99}};
        EXPECT_EQ(body(c.Post("/sessions/" + id + "/proposals/choose", bad.dump(), "application/json"))["error"],
                  "invalid_choice");

        ordered_json choice{{"index", 0}, {"base_fingerprint", fp}};
        r = c.Post("/sessions/" + id + "/proposals/choose", choice.dump(), "application/json");
        ASSERT_EQ(r->status, 200);
        fp_after = body(r)["dag_fingerprint"].get<std::string>();
        EXPECT_NE(fp_after, fp);
        EXPECT_EQ(body(r)["status"], "consistent");
        journal = c.Get("/sessions/" + id + "/journal")->body;
        EXPECT_EQ(body(c.Get("/sessions/" + id + "/journal"))["journal"]["steps"][0]["decider"], "human");
    }
    Server again(root);
    EXPECT_EQ(again.service.session_count(), 1u);
    auto c = again.client();
    auto s = body(c.Get("/sessions/" + id));
    EXPECT_EQ(s["dag_fingerprint"], fp_after);
    EXPECT_EQ(s["refinement_status"], "consistent");
    EXPECT_EQ(c.Get("/sessions/" + id + "/journal")->body, journal);
    fs::remove_all(root);
}

TEST(Service, ManualEditAbortsPendingRefinement) {
    Server srv;
    auto c = srv.client();
    auto id = post_session(c, collider_text);
    c.Put("/sessions/" + id + "/dataset", chain_csv(), "text/csv");
    c.Post("/sessions/" + id + "/refinement", R"({"config":{"permutations":199}})", "application/json");
    ordered_json edit;
    edit["edit"] = {{"kind", "add_edge"}, {"from", "a"}, {"to", "c"}};
    ASSERT_EQ(c.Post("/sessions/" + id + "/edits", edit.dump(), "application/json")->status, 200);
    EXPECT_EQ(body(c.Get("/sessions/" + id))["refinement_status"], "aborted");
    ordered_json choice{{"index", 0}};
    EXPECT_EQ(c.Post("/sessions/" + id + "/proposals/choose", choice.dump(), "application/json")->status, 400);
}
