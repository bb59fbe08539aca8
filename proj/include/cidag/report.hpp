#pragma once

// Plain-text rendering of test results (one row per hypothesis, as in a
// results table) and of refinement sessions (a per-step narrative).

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "cidag/refinement.hpp"
#include "cidag/stats.hpp"

namespace cidag {

struct Report {
    std::string text;
    ordered_json json;
};

struct TableOptions {
    bool r_rule = false;  // extra column: dcov statistic > 1 read as dependence
};

inline std::string format_p(double p) {
    char buf[32];
    if (p != 0 && p < 1e-4)
        std::snprintf(buf, sizeof buf, "%.3e", p);
    else
        std::snprintf(buf, sizeof buf, "%.6f", p);
    return buf;
}

inline std::string format_stat(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", s);
    return buf;
}

inline std::string render_results_table(const std::vector<TestResult>& results, const TableOptions& opt = {}) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"#", "Hypothesis", "Test", "Statistic", "p-value", "Decision"};
    if (opt.r_rule) header.push_back("R rule");
    double alpha = results.empty() ? 0.05 : results.front().alpha;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::vector<std::string> row{"H" + std::to_string(i + 1), to_string(r.claim),
                                     r.method == TestMethod::distance_covariance ? "dcov" : "KCI", format_stat(r.statistic),
                                     format_p(r.p_value) + (r.p_value < r.alpha ? "*" : ""),
                                     r.degenerate ? "degenerate" : (r.rejected() ? "reject" : "fail to reject")};
        if (opt.r_rule)
            row.push_back(r.method == TestMethod::distance_covariance ? (r.statistic > 1 ? "dependent" : "independent")
                                                                     : "-");
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            s += cells[c];
            if (c + 1 < cells.size()) s += std::string(width[c] - cells[c].size() + 2, ' ');
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        out << s << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    out << std::string(total - 2, '-') << '\n';
    for (const auto& r : rows) line(r);
    if (!rows.empty()) out << "* p < " << format_stat(alpha) << '\n';
    return out.str();
}

inline Report render_report(const std::vector<TestResult>& results, const TableOptions& opt = {}) {
    Report rep;
    const auto s = summarize(results);
    std::ostringstream out;
    out << "Independence tests: " << results.size() << " claims, " << s.passed << " passed, " << s.failed
        << " failed, " << s.degenerate << " degenerate\n\n";
    out << render_results_table(results, opt);
    rep.text = out.str();
    rep.json["results"] = ordered_json::array();
    for (const auto& r : results) rep.json["results"].push_back(to_json(r));
    rep.json["summary"] = to_json(s);
    return rep;
}

inline std::string one_line(const TestResult& r) {
    return to_string(r.claim) + " (" + (r.method == TestMethod::distance_covariance ? "dcov" : "KCI") +
           ", statistic " + format_stat(r.statistic) + ", p = " + format_p(r.p_value) + "): " +
           (r.degenerate ? "degenerate" : (r.rejected() ? "reject" : "fail to reject"));
}

inline Report render_report(const RefinementSession& s) {
    Report rep;
    std::ostringstream out;
    std::size_t edits = 0;
    for (const auto& st : s.steps) edits += st.applied ? 1 : 0;
    out << "Refinement session: " << to_string(s.status) << " after " << s.steps.size() << " evaluation"
        << (s.steps.size() == 1 ? "" : "s") << ", " << edits << " edit" << (edits == 1 ? "" : "s") << "\n";
    out << "Initial DAG " << dag_fingerprint(s.initial_dag) << ", final DAG " << dag_fingerprint(s.final_dag) << "\n";

    for (std::size_t i = 0; i < s.steps.size(); ++i) {
        const auto& st = s.steps[i];
        out << "\nStep " << i + 1 << " (DAG " << st.dag_fingerprint << "): " << st.results.size() << " claims, "
            << st.summary.passed << " passed, " << st.summary.failed << " failed, " << st.summary.degenerate
            << " degenerate\n";
        for (const auto& r : st.results) out << "  " << one_line(r) << "\n";
        if (st.failed_claim) out << "  First failure: " << to_string(*st.failed_claim) << "\n";
        if (st.applied) {
            const auto& p = *st.applied;
            out << "  Applied (" << to_string(st.decider) << "): " << describe(p.edit) << " [" << to_string(p.mechanism)
                << "]\n";
            out << "    " << p.rationale << "\n";
            for (const auto& f : st.followup_results) out << "    follow-up " << one_line(f) << "\n";
        }
    }
    out << "\n";
    switch (s.status) {
    case SessionStatus::consistent: out << "Every implication of the final DAG passes.\n"; break;
    case SessionStatus::exhausted: out << "Stopped without reaching a consistent DAG.\n"; break;
    case SessionStatus::aborted: out << "Aborted by the decider.\n"; break;
    case SessionStatus::running: out << "Session still running.\n"; break;
    }
    if (!s.undetermined_orientations.empty()) {
        out << "Orientation not fixed by any tested claim:";
        for (const auto& e : s.undetermined_orientations) out << " " << e.from << " -> " << e.to << ";";
        out << "\n";
    }
    out << "\nFinal DAG:\n" << serialize_dag(s.final_dag);
    rep.text = out.str();
    rep.json = to_json(s);
    return rep;
}

} // namespace cidag
