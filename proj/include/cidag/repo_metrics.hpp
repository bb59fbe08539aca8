#pragma once

// Repository event logs (JSONL exports) to the seven per-release variables:
// CI service classification, merge-conflict detection from parent diffs,
// bug classification and 30-day window aggregation.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cidag/dataset.hpp"
#include "cidag/error.hpp"

namespace cidag {

using Instant = std::chrono::sys_seconds;

/// RFC 3339 timestamp; fractional seconds are truncated.
inline Instant parse_instant(std::string_view s) {
    auto fail = [&] { return InvalidArgument("not an RFC 3339 timestamp: '" + std::string(s) + "'"); };
    auto num = [&](std::size_t pos, std::size_t len) {
        if (pos + len > s.size()) throw fail();
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') throw fail();
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':')
        throw fail();
    using namespace std::chrono;
    const year_month_day ymd{year{num(0, 4)}, month{static_cast<unsigned>(num(5, 2))},
                             day{static_cast<unsigned>(num(8, 2))}};
    if (!ymd.ok()) throw fail();
    const int hh = num(11, 2), mm = num(14, 2), ss = num(17, 2);
    if (hh > 23 || mm > 59 || ss > 60) throw fail();
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
    if (pos >= s.size()) throw fail();
    int offset_minutes = 0;
    if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
        if (pos + 6 != s.size() || s[pos + 3] != ':') throw fail();
        offset_minutes = num(pos + 1, 2) * 60 + num(pos + 4, 2);
        if (s[pos] == '-') offset_minutes = -offset_minutes;
        pos += 6;
    } else {
        throw fail();
    }
    if (pos != s.size()) throw fail();
    return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

inline std::string format_instant(Instant t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

struct FileChange {
    std::string path;
    std::size_t lines_added = 0;
    std::size_t lines_removed = 0;
    bool is_test = false;
};

struct CommitRecord {
    std::string sha;
    std::vector<std::string> parents;
    Instant timestamp{};
    std::optional<std::string> pull_request;
    std::vector<FileChange> files;
};

struct PullRequestRecord {
    std::string id;
    Instant opened_at{};
    std::size_t comments = 0;
    std::size_t review_comments = 0;
};

struct IssueRecord {
    std::string id;
    Instant created_at{};
    std::vector<std::string> labels;
    std::string title;
    std::string body;
};

struct RepoEventLog {
    std::string project;
    Instant repo_created_at{};
    std::optional<Instant> ci_adopted_at;
    std::optional<Instant> alignment_start;  // supplied for projects without CI
    std::vector<std::string> paths;           // repository file listing, for CI classification
    std::map<std::string, bool> ci_api_presence;
    std::vector<CommitRecord> commits;
    std::vector<PullRequestRecord> pull_requests;
    std::vector<IssueRecord> issues;
    std::map<std::string, std::string> conflict_probe;  // merge sha -> parent-vs-parent diff
    std::vector<std::string> dangling_parents;          // "sha:parent" for parents missing from the log
};

namespace detail {

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

inline std::string id_string(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

} // namespace detail

/// One JSON object per line, each with a "type" of meta, commit,
/// pull_request, issue or conflict_probe.
inline RepoEventLog read_event_log(std::istream& in) {
    RepoEventLog log;
    bool have_meta = false;
    std::set<std::string> shas, issue_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (type == "meta") {
                if (have_meta) throw InvalidArgument("second meta record");
                have_meta = true;
                log.project = detail::field_or<std::string>(j, "project", "");
                log.repo_created_at = parse_instant(j.at("repo_created_at").get<std::string>());
                if (auto t = detail::field_or<std::string>(j, "ci_adopted_at", ""); !t.empty())
                    log.ci_adopted_at = parse_instant(t);
                if (auto t = detail::field_or<std::string>(j, "alignment_start", ""); !t.empty())
                    log.alignment_start = parse_instant(t);
                log.paths = detail::field_or<std::vector<std::string>>(j, "paths", {});
                log.ci_api_presence = detail::field_or<std::map<std::string, bool>>(j, "ci_api_presence", {});
            } else if (type == "commit") {
                CommitRecord c;
                c.sha = j.at("sha").get<std::string>();
                if (!shas.insert(c.sha).second) throw InvalidArgument("duplicate commit sha " + c.sha);
                c.parents = detail::field_or<std::vector<std::string>>(j, "parents", {});
                c.timestamp = parse_instant(j.at("timestamp").get<std::string>());
                if (auto it = j.find("pull_request"); it != j.end() && !it->is_null())
                    c.pull_request = detail::id_string(*it);
                for (const auto& f : j.value("files", nlohmann::json::array())) {
                    FileChange fc;
                    fc.path = detail::field_or<std::string>(f, "path", "");
                    fc.lines_added = detail::field_or<std::size_t>(f, "lines_added", 0);
                    fc.lines_removed = detail::field_or<std::size_t>(f, "lines_removed", 0);
                    fc.is_test = detail::field_or<bool>(f, "is_test", false);
                    c.files.push_back(std::move(fc));
                }
                log.commits.push_back(std::move(c));
            } else if (type == "pull_request") {
                PullRequestRecord p;
                p.id = detail::id_string(j.at("id"));
                p.opened_at = parse_instant(j.at("opened_at").get<std::string>());
                p.comments = detail::field_or<std::size_t>(j, "comments", 0);
                p.review_comments = detail::field_or<std::size_t>(j, "review_comments", 0);
                log.pull_requests.push_back(std::move(p));
            } else if (type == "issue") {
                IssueRecord i;
                i.id = detail::id_string(j.at("id"));
                if (!issue_ids.insert(i.id).second) throw InvalidArgument("duplicate issue id " + i.id);
                i.created_at = parse_instant(j.at("created_at").get<std::string>());
                i.labels = detail::field_or<std::vector<std::string>>(j, "labels", {});
                i.title = detail::field_or<std::string>(j, "title", "");
                i.body = detail::field_or<std::string>(j, "body", "");
                log.issues.push_back(std::move(i));
            } else if (type == "conflict_probe") {
                log.conflict_probe[j.at("sha").get<std::string>()] = j.at("diff").get<std::string>();
            } else {
                throw InvalidArgument("unknown record type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, 1, e.what());
        } catch (const InvalidArgument& e) {
            throw ParseError(line_no, 1, e.what());
        }
    }
    if (!have_meta) throw ParseError(line_no ? line_no : 1, 1, "event log has no meta record");
    if (log.ci_adopted_at && *log.ci_adopted_at < log.repo_created_at)
        throw DataError("ci_adopted_at precedes repo_created_at");
    for (const auto& c : log.commits)
        for (const auto& p : c.parents)
            if (!shas.count(p)) log.dangling_parents.push_back(c.sha + ":" + p);
    return log;
}

inline RepoEventLog load_event_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_event_log(in);
}

struct ConflictScan {
    std::vector<std::string> flagged;    // commit-timestamp order
    std::vector<std::string> unscanned;  // merge commits without a probe
};

inline ConflictScan detect_merge_conflicts(const RepoEventLog& log) {
    std::vector<const CommitRecord*> commits;
    for (const auto& c : log.commits) commits.push_back(&c);
    std::stable_sort(commits.begin(), commits.end(),
                     [](const CommitRecord* a, const CommitRecord* b) { return a->timestamp < b->timestamp; });
    ConflictScan out;
    for (const auto* c : commits) {
        if (c->parents.size() <= 1) continue;
        auto probe = log.conflict_probe.find(c->sha);
        if (probe == log.conflict_probe.end()) {
            out.unscanned.push_back(c->sha);
            continue;
        }
        const auto& diff = probe->second;
        if (diff.find("<<<<<<< HEAD") != std::string::npos && diff.find("<<<<<<<") != std::string::npos)
            out.flagged.push_back(c->sha);
    }
    return out;
}

enum class CiService { travis, github_actions, circle, jenkins, appveyor, wercker };

inline const char* to_string(CiService s) {
    switch (s) {
    case CiService::travis: return "travis";
    case CiService::github_actions: return "github_actions";
    case CiService::circle: return "circle";
    case CiService::jenkins: return "jenkins";
    case CiService::appveyor: return "appveyor";
    case CiService::wercker: return "wercker";
    }
    return "?";
}

namespace detail {

inline std::string_view basename(std::string_view p) {
    auto slash = p.find_last_of('/');
    return slash == std::string_view::npos ? p : p.substr(slash + 1);
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace detail

/// First service matching, in the order travis, GitHub Actions, circle,
/// jenkins, appveyor, wercker. Paths are repository-relative.
inline std::optional<CiService> classify_ci_service(const std::vector<std::string>& files,
                                                    const std::map<std::string, bool>& api_presence) {
    auto api = [&](const char* key) {
        auto it = api_presence.find(key);
        return it != api_presence.end() && it->second;
    };
    auto any = [&](auto pred) { return std::any_of(files.begin(), files.end(), pred); };
    auto norm = [](std::string_view p) {
        while (p.size() > 1 && p.substr(0, 2) == "./") p.remove_prefix(2);
        return p;
    };

    if (api("travis") || any([&](const std::string& f) { return detail::basename(f) == ".travis.yml"; }))
        return CiService::travis;
    if (any([&](const std::string& f) {
            auto p = norm(f);
            auto dir = p.find(".github/workflows/");
            return (dir == 0 || (dir != std::string_view::npos && p[dir - 1] == '/')) && detail::ends_with(p, ".yml");
        }))
        return CiService::github_actions;
    if (api("circle") || any([&](const std::string& f) {
            auto p = norm(f);
            return p == ".circleci/config.yml" || detail::ends_with(p, "/.circleci/config.yml");
        }))
        return CiService::circle;
    if (any([&](const std::string& f) { return detail::basename(f) == "Jenkinsfile"; })) return CiService::jenkins;
    if (any([&](const std::string& f) { return detail::basename(f) == "appveyor.yml"; })) return CiService::appveyor;
    if (api("wercker")) return CiService::wercker;
    return std::nullopt;
}

/// label_map keys must be lower-case; labels are lower-cased before lookup.
inline std::set<std::string> classify_bugs(const std::vector<IssueRecord>& issues,
                                           const std::map<std::string, bool>& label_map, bool fallback) {
    std::set<std::string> out;
    for (const auto& issue : issues) {
        bool bug = false;
        for (const auto& l : issue.labels) {
            auto it = label_map.find(detail::lower(l));
            if (it != label_map.end() && it->second) bug = true;
        }
        if (!bug && issue.labels.empty() && fallback) {
            for (const auto* text : {&issue.title, &issue.body}) {
                auto t = detail::lower(*text);
                if (t.find("bug") != std::string::npos || t.find("fix") != std::string::npos) bug = true;
            }
        }
        if (bug) out.insert(issue.id);
    }
    return out;
}

inline constexpr std::size_t release_windows = 12;
inline constexpr auto window_length = std::chrono::days{30};

struct ReleaseMetrics {
    std::string project;
    std::size_t release_index = 0;  // 1..12
    int CI = 0;
    long long Age = 0;
    std::size_t CommitFrequency = 0;
    double Communication = 0;
    std::size_t MergeConflicts = 0;
    double TestsVolume = 0;
    std::size_t BugReport = 0;

    bool operator==(const ReleaseMetrics&) const = default;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const auto m = v.size();
    return m % 2 ? v[m / 2] : (v[m / 2 - 1] + v[m / 2]) / 2;
}

} // namespace detail

/// Twelve consecutive 30-day windows [start + 30(k-1), start + 30k) days.
inline std::vector<ReleaseMetrics> compute_release_metrics(const RepoEventLog& log, const std::set<std::string>& bug_ids,
                                                           const std::vector<std::string>& conflict_shas,
                                                           bool is_ci_project, Instant alignment_start) {
    if (alignment_start < log.repo_created_at) throw DataError("alignment start precedes repository creation");

    Instant history_end = log.repo_created_at;
    for (const auto& c : log.commits) history_end = std::max(history_end, c.timestamp);
    for (const auto& p : log.pull_requests) history_end = std::max(history_end, p.opened_at);
    for (const auto& i : log.issues) history_end = std::max(history_end, i.created_at);
    const Instant last_window = alignment_start + window_length * (release_windows - 1);
    if (history_end < last_window)
        throw DataError("project '" + log.project + "' has fewer than 12 windows of history (last event " +
                        format_instant(history_end) + ")");

    auto window_of = [&](Instant t) -> std::optional<std::size_t> {
        if (t < alignment_start) return std::nullopt;
        auto k = static_cast<std::size_t>((t - alignment_start) / window_length);
        if (k >= release_windows) return std::nullopt;
        return k;
    };

    std::vector<ReleaseMetrics> rows(release_windows);
    std::vector<std::size_t> pr_count(release_windows, 0), pr_talk(release_windows, 0);
    std::vector<std::vector<double>> test_share(release_windows);
    for (std::size_t k = 0; k < release_windows; ++k) {
        auto& r = rows[k];
        r.project = log.project;
        r.release_index = k + 1;
        r.CI = is_ci_project ? 1 : 0;
        const Instant end = alignment_start + window_length * (k + 1);
        r.Age = std::chrono::floor<std::chrono::days>(end - log.repo_created_at).count();
    }

    const std::set<std::string> conflicts(conflict_shas.begin(), conflict_shas.end());
    for (const auto& c : log.commits) {
        auto k = window_of(c.timestamp);
        if (!k) continue;
        if (c.pull_request) ++rows[*k].CommitFrequency;
        if (conflicts.count(c.sha)) ++rows[*k].MergeConflicts;
        std::size_t test = 0, total = 0;
        for (const auto& f : c.files) {
            total += f.lines_added + f.lines_removed;
            if (f.is_test) test += f.lines_added + f.lines_removed;
        }
        if (total > 0) test_share[*k].push_back(static_cast<double>(test) / static_cast<double>(total));
    }
    for (const auto& p : log.pull_requests) {
        if (auto k = window_of(p.opened_at)) {
            ++pr_count[*k];
            pr_talk[*k] += p.comments + p.review_comments;
        }
    }
    for (const auto& i : log.issues)
        if (auto k = window_of(i.created_at); k && bug_ids.count(i.id)) ++rows[*k].BugReport;

    for (std::size_t k = 0; k < release_windows; ++k) {
        rows[k].Communication =
            pr_count[k] ? static_cast<double>(pr_talk[k]) / static_cast<double>(pr_count[k]) : 0.0;
        rows[k].TestsVolume = detail::median(test_share[k]);
    }
    return rows;
}

inline const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> names{"CI",          "Age",        "CommitFrequency", "Communication",
                                                "MergeConflicts", "TestsVolume", "BugReport"};
    return names;
}

inline DatasetTable build_dataset(const std::vector<ReleaseMetrics>& rows) {
    if (rows.empty()) throw DataError("build_dataset needs at least one row");
    std::set<std::pair<std::string, std::size_t>> seen;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 7);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (!seen.insert({r.project, r.release_index}).second)
            throw DataError("duplicate row for project '" + r.project + "' release " + std::to_string(r.release_index));
        m.row(static_cast<Eigen::Index>(i)) << r.CI, static_cast<double>(r.Age), static_cast<double>(r.CommitFrequency),
            r.Communication, static_cast<double>(r.MergeConflicts), r.TestsVolume, static_cast<double>(r.BugReport);
    }
    return DatasetTable(metric_columns(), std::move(m));
}

struct IngestOptions {
    std::map<std::string, bool> label_map{{"bug", true}};
    bool keyword_fallback = true;
};

/// Full pipeline for one project log.
inline std::vector<ReleaseMetrics> ingest_project(const RepoEventLog& log, const IngestOptions& opt = {}) {
    const bool ci = log.ci_adopted_at.has_value();
    const std::optional<Instant> start = ci ? log.ci_adopted_at : log.alignment_start;
    if (!start) throw DataError("project '" + log.project + "' has no CI adoption date and no alignment_start");
    const auto bugs = classify_bugs(log.issues, opt.label_map, opt.keyword_fallback);
    const auto scan = detect_merge_conflicts(log);
    return compute_release_metrics(log, bugs, scan.flagged, ci, *start);
}

} // namespace cidag
