#pragma once

// Command-line front end. Exit codes: 0 success, 1 validation or consistency
// failure, 2 usage error. Diagnostics go to the error stream.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cidag/dataset.hpp"
#include "cidag/dsep.hpp"
#include "cidag/graph.hpp"
#include "cidag/implications.hpp"
#include "cidag/refinement.hpp"
#include "cidag/report.hpp"
#include "cidag/repo_metrics.hpp"
#include "cidag/service.hpp"
#include "cidag/stats.hpp"

namespace cidag {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

namespace detail {

class UsageError : public Error {
public:
    using Error::Error;
};

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string set_text(const VarSet& s) {
    std::string out = "{";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + s[i];
    return out + "}";
}

struct CliState {
    std::string format = "table";
    double alpha = 0.05;
    std::size_t permutations = 999;
    std::uint64_t seed = 0;
    bool interactive = false;
    std::size_t max_iterations = 25;
    std::string dag_path;
    std::string data_path;
    std::string journal_path;
    std::string json_out;
    std::string exposure;
    std::string outcome;
    std::vector<std::string> logs;
    std::string output;
    std::vector<std::string> bug_labels{"bug"};
    bool no_keyword_fallback = false;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string state_dir;
    bool r_rule = false;

    TestConfig config() const {
        TestConfig c;
        c.alpha = alpha;
        c.permutations = permutations;
        c.rng_seed = seed;
        c.validate();
        return c;
    }
};

inline int cmd_validate(const CliState& st, std::ostream& out, std::ostream& err) {
    DagSpec spec;
    try {
        spec = parse_dag_spec(read_text(st.dag_path));
    } catch (const ParseError& e) {
        err << st.dag_path << ": " << e.what() << "\n";
        return exit_failure;
    }
    auto report = validate_dag(spec);
    if (!report.empty()) {
        for (const auto& v : report)
            err << st.dag_path << ": " << (v.code == Violation::Code::cycle ? "cycle: " : "") << v.message << "\n";
        return exit_failure;
    }
    CausalDag dag(spec);
    if (st.format == "json") {
        ordered_json j;
        j["valid"] = true;
        j["dag_fingerprint"] = dag_fingerprint(dag);
        j["variables"] = dag.size();
        j["edges"] = dag.edges().size();
        out << json_text(j);
    } else {
        out << "valid: " << dag.size() << " variables, " << dag.edges().size() << " edges, fingerprint "
            << dag_fingerprint(dag) << "\n";
    }
    return exit_ok;
}

inline int cmd_implications(const CliState& st, std::ostream& out) {
    auto dag = parse_dag(read_text(st.dag_path));
    auto h = implied_independencies(dag);
    if (st.format == "json") {
        out << json_text(to_json(h));
        return exit_ok;
    }
    for (std::size_t i = 0; i < h.claims.size(); ++i) out << "H" << i + 1 << ". " << to_string(h.claims[i]) << "\n";
    for (const auto& p : h.latent_only) out << "untestable (latent separators only): " << p.x << ", " << p.y << "\n";
    return exit_ok;
}

inline int cmd_adjust(const CliState& st, std::ostream& out, std::ostream& err) {
    auto dag = parse_dag(read_text(st.dag_path));
    std::string x = !st.exposure.empty() ? st.exposure : dag.exposure().value_or("");
    std::string y = !st.outcome.empty() ? st.outcome : dag.outcome().value_or("");
    if (x.empty() || y.empty()) {
        err << "adjust: the DAG marks no exposure/outcome; pass --exposure and --outcome\n";
        return exit_usage;
    }
    auto r = minimal_adjustment_sets(dag, x, y);
    auto paths = backdoor_paths(dag, x, y);
    if (st.format == "json") {
        ordered_json j;
        j["dag_fingerprint"] = dag_fingerprint(dag);
        j["exposure"] = x;
        j["outcome"] = y;
        j["admissible"] = r.admissible;
        j["adjustment_sets"] = r.sets;
        j["backdoor_paths"] = ordered_json::array();
        for (const auto& p : paths) j["backdoor_paths"].push_back(to_json(p)["text"]);
        out << json_text(j);
        return exit_ok;
    }
    out << "exposure " << x << ", outcome " << y << "\n";
    if (!r.admissible) out << "no admissible adjustment set over observed variables\n";
    for (const auto& s : r.sets) out << set_text(s) << "\n";
    for (const auto& p : paths) out << "backdoor: " << to_json(p)["text"].get<std::string>() << "\n";
    return exit_ok;
}

inline int cmd_test(const CliState& st, std::ostream& out) {
    auto dag = parse_dag(read_text(st.dag_path));
    auto data = load_csv(st.data_path);
    auto ev = evaluate_dag(data, dag, st.config());
    auto rep = render_report(ev.results, {st.r_rule});
    ordered_json j = to_json(ev);
    if (!st.json_out.empty()) std::ofstream(st.json_out) << json_text(j);
    if (st.format == "json")
        out << json_text(j);
    else
        out << rep.text;
    return ev.consistent() ? exit_ok : exit_failure;
}

inline int cmd_refine(const CliState& st, std::istream& in, std::ostream& out, std::ostream& err) {
    auto dag = parse_dag(read_text(st.dag_path));
    auto data = load_csv(st.data_path);
    RefineOptions opt;
    opt.max_iterations = st.max_iterations;
    if (st.interactive) {
        opt.policy = Policy::interactive;
        opt.decide = [&](const FailureDiagnosis& d, const std::vector<std::vector<TestResult>>& follow)
            -> std::optional<std::size_t> {
            err << "\nFailed: " << to_string(d.failed_claim) << "\n";
            for (std::size_t i = 0; i < d.candidates.size(); ++i) {
                const auto& c = d.candidates[i];
                err << "  [" << i << "] " << describe(c.edit) << " (" << to_string(c.mechanism) << ")\n";
                for (const auto& r : follow[i]) err << "      follow-up " << one_line(r) << "\n";
            }
            for (;;) {
                err << "choose a proposal (index, or q to stop): " << std::flush;
                std::string line;
                if (!std::getline(in, line) || line == "q") return std::nullopt;
                try {
                    auto k = std::stoul(line);
                    if (k < d.candidates.size()) return k;
                } catch (const std::exception&) {
                }
                err << "not a valid choice\n";
            }
        };
    }
    auto session = refine(dag, data, st.config(), opt);
    auto rep = render_report(session);
    if (!st.journal_path.empty()) std::ofstream(st.journal_path) << json_text(rep.json);
    if (st.format == "json")
        out << json_text(rep.json);
    else
        out << rep.text;
    return session.status == SessionStatus::consistent ? exit_ok : exit_failure;
}

inline int cmd_ingest(const CliState& st, std::ostream& out, std::ostream& err) {
    IngestOptions opt;
    opt.label_map.clear();
    for (const auto& l : st.bug_labels) opt.label_map[detail::lower(l)] = true;
    opt.keyword_fallback = !st.no_keyword_fallback;
    std::vector<ReleaseMetrics> rows;
    for (const auto& path : st.logs) {
        auto log = load_event_log(path);
        if (log.project.empty()) log.project = path;
        auto ci = classify_ci_service(log.paths, log.ci_api_presence);
        auto scan = detect_merge_conflicts(log);
        err << log.project << ": ci service " << (ci ? to_string(*ci) : "none") << ", " << scan.flagged.size()
            << " conflicting merges, " << scan.unscanned.size() << " merges without probe, "
            << log.dangling_parents.size() << " dangling parents\n";
        auto metrics = ingest_project(log, opt);
        rows.insert(rows.end(), metrics.begin(), metrics.end());
    }
    auto table = build_dataset(rows);
    if (st.output.empty() || st.output == "-") {
        write_csv(out, table);
    } else {
        std::ofstream f(st.output);
        if (!f) throw UsageError("cannot write '" + st.output + "'");
        write_csv(f, table);
    }
    return exit_ok;
}

inline int cmd_serve(const CliState& st, std::ostream& err) {
    std::string root = st.state_dir;
    if (root.empty())
        if (const char* env = std::getenv("CIDAG_STATE_DIR")) root = env;
    Service service(root);
    httplib::Server svr;
    service.mount(svr);
    err << "listening on " << st.host << ":" << st.port << (root.empty() ? "" : ", state in " + root) << "\n";
    if (!svr.listen(st.host, st.port)) {
        err << "cannot listen on " << st.host << ":" << st.port << "\n";
        return exit_failure;
    }
    return exit_ok;
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::istream& in = std::cin, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    detail::CliState st;
    CLI::App app{"causal DAG validation against observational data"};
    app.require_subcommand(1);

    auto add_format = [&](CLI::App* c) {
        c->add_option("--format", st.format, "output format")->check(CLI::IsMember({"json", "table"}));
    };
    auto add_stats = [&](CLI::App* c) {
        c->add_option("--alpha", st.alpha, "significance level")->check(CLI::Range(0.0, 1.0));
        c->add_option("--permutations", st.permutations, "permutations for permutation nulls");
        c->add_option("--seed", st.seed, "base RNG seed");
    };

    auto* validate = app.add_subcommand("validate", "check a DAG file");
    validate->add_option("dag", st.dag_path)->required();
    add_format(validate);

    auto* implications = app.add_subcommand("implications", "list testable independence claims");
    implications->add_option("dag", st.dag_path)->required();
    add_format(implications);

    auto* adjust = app.add_subcommand("adjust", "minimal backdoor adjustment sets");
    adjust->add_option("dag", st.dag_path)->required();
    adjust->add_option("--exposure", st.exposure);
    adjust->add_option("--outcome", st.outcome);
    add_format(adjust);

    auto* test = app.add_subcommand("test", "test a DAG's implications against a CSV dataset");
    test->add_option("dag", st.dag_path)->required();
    test->add_option("data", st.data_path)->required();
    test->add_option("--json-out", st.json_out, "also write the JSON results here");
    test->add_flag("--r-rule", st.r_rule, "show the statistic > 1 reading for unconditional tests");
    add_format(test);
    add_stats(test);

    auto* refine_cmd = app.add_subcommand("refine", "refine a DAG until its implications hold");
    refine_cmd->add_option("dag", st.dag_path)->required();
    refine_cmd->add_option("data", st.data_path)->required();
    refine_cmd->add_flag("--interactive", st.interactive, "choose each edit at a prompt");
    refine_cmd->add_option("--max-iterations", st.max_iterations);
    refine_cmd->add_option("--journal", st.journal_path, "write the session journal JSON here");
    add_format(refine_cmd);
    add_stats(refine_cmd);

    auto* ingest = app.add_subcommand("ingest", "convert JSONL event logs to a dataset CSV");
    ingest->add_option("logs", st.logs)->required();
    ingest->add_option("-o,--output", st.output, "CSV path (default stdout)");
    ingest->add_option("--bug-label", st.bug_labels, "issue label marking a bug (repeatable)");
    ingest->add_flag("--no-keyword-fallback", st.no_keyword_fallback);

    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    serve->add_option("--host", st.host);
    serve->add_option("--port", st.port);
    serve->add_option("--state-dir", st.state_dir, "state root (default $CIDAG_STATE_DIR)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << "run with --help for usage\n";
        return exit_usage;
    }

    try {
        if (validate->parsed()) return detail::cmd_validate(st, out, err);
        if (implications->parsed()) return detail::cmd_implications(st, out);
        if (adjust->parsed()) return detail::cmd_adjust(st, out, err);
        if (test->parsed()) return detail::cmd_test(st, out);
        if (refine_cmd->parsed()) return detail::cmd_refine(st, in, out, err);
        if (ingest->parsed()) return detail::cmd_ingest(st, out, err);
        if (serve->parsed()) return detail::cmd_serve(st, err);
    } catch (const detail::UsageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

} // namespace cidag
