#pragma once

// Causal DAG data model: variables, edges, the line-oriented text format and
// structural validation. Every other header in cidag consumes these types.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cidag/error.hpp"

namespace cidag {

enum class VariableKind { observed, latent };

struct Variable {
    std::string name;
    VariableKind kind = VariableKind::observed;
    std::string description;

    bool operator==(const Variable&) const = default;
};

struct Edge {
    std::string from;
    std::string to;

    auto operator<=>(const Edge&) const = default;
};

enum class EditKind { add_edge, remove_edge, reverse_edge };

struct DagEdit {
    EditKind kind = EditKind::add_edge;
    std::string from;
    std::string to;
    std::string rationale;

    bool operator==(const DagEdit&) const = default;
};

/// Sorted, duplicate-free list of variable names.
using VarSet = std::vector<std::string>;

inline VarSet make_varset(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

/// Unvalidated graph description: what the parser produces and what
/// validate_dag inspects. A CausalDag is only ever built from a spec with an
/// empty violation report.
struct DagSpec {
    std::vector<Variable> variables;
    std::vector<Edge> edges;
    std::optional<std::string> exposure;
    std::optional<std::string> outcome;
};

struct Violation {
    enum class Code {
        invalid_name,
        duplicate_variable,
        unknown_endpoint,
        self_loop,
        duplicate_edge,
        opposing_edges,
        cycle,
        bad_role,
    };

    Code code;
    std::string message;
    std::vector<std::string> nodes;
};

inline bool is_valid_name(std::string_view name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

namespace detail {

// Kahn's algorithm over an index graph; smallest index first so the order is
// deterministic. Returns the order, or the nodes left over when a cycle exists.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
kahn(std::size_t n, const std::vector<std::vector<std::size_t>>& children) {
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& out : children)
        for (auto c : out) ++indegree[c];
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (auto c : children[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    std::vector<std::size_t> stuck;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] > 0) stuck.push_back(i);
    return {std::move(order), std::move(stuck)};
}

} // namespace detail

inline std::vector<Violation> validate_dag(const DagSpec& spec) {
    std::vector<Violation> report;
    std::map<std::string, std::size_t> index;
    std::map<std::string, VariableKind> kinds;
    for (const auto& v : spec.variables) {
        if (!is_valid_name(v.name)) {
            report.push_back({Violation::Code::invalid_name,
                              "variable name '" + v.name + "' must match [A-Za-z0-9_]+", {v.name}});
            continue;
        }
        if (index.count(v.name)) {
            report.push_back({Violation::Code::duplicate_variable,
                              "variable '" + v.name + "' declared more than once", {v.name}});
            continue;
        }
        index.emplace(v.name, index.size());
        kinds.emplace(v.name, v.kind);
    }

    std::vector<std::vector<std::size_t>> children(index.size());
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : spec.edges) {
        bool dangling = false;
        for (const auto* end : {&e.from, &e.to}) {
            if (!index.count(*end)) {
                report.push_back({Violation::Code::unknown_endpoint,
                                  "edge " + e.from + " -> " + e.to + " references undeclared variable '" + *end + "'",
                                  {*end}});
                dangling = true;
            }
        }
        if (e.from == e.to) {
            report.push_back({Violation::Code::self_loop, "self-loop on '" + e.from + "'", {e.from}});
            continue;
        }
        if (!seen.insert({e.from, e.to}).second) {
            report.push_back({Violation::Code::duplicate_edge,
                              "duplicate edge " + e.from + " -> " + e.to, {e.from, e.to}});
            continue;
        }
        if (seen.count({e.to, e.from})) {
            report.push_back({Violation::Code::opposing_edges,
                              "edges in both directions between '" + e.from + "' and '" + e.to + "'",
                              make_varset({e.from, e.to})});
            continue;
        }
        if (!dangling) children[index.at(e.from)].push_back(index.at(e.to));
    }

    auto [order, stuck] = detail::kahn(index.size(), children);
    if (!stuck.empty()) {
        std::vector<std::string> names(index.size());
        for (const auto& [name, i] : index) names[i] = name;
        std::vector<std::string> nodes;
        for (auto i : stuck) nodes.push_back(names[i]);
        std::string msg = "directed cycle through";
        for (const auto& n : nodes) msg += " " + n;
        report.push_back({Violation::Code::cycle, msg, make_varset(nodes)});
    }

    auto check_role = [&](const std::optional<std::string>& role, const char* label) {
        if (!role) return;
        auto it = kinds.find(*role);
        if (it == kinds.end())
            report.push_back({Violation::Code::bad_role,
                              std::string(label) + " '" + *role + "' is not a declared variable", {*role}});
        else if (it->second == VariableKind::latent)
            report.push_back({Violation::Code::bad_role,
                              std::string(label) + " '" + *role + "' must be observed", {*role}});
    };
    check_role(spec.exposure, "exposure");
    check_role(spec.outcome, "outcome");
    return report;
}

/// Validated, immutable causal DAG. Variables are stored sorted by name and
/// addressed either by name or by their index in that order.
class CausalDag {
public:
    CausalDag() = default;

    /// Throws CycleError for cycles (2-cycles included) and GraphError for any other violation.
    explicit CausalDag(DagSpec spec) {
        auto report = validate_dag(spec);
        if (!report.empty()) {
            for (const auto& v : report)
                if (v.code == Violation::Code::cycle || v.code == Violation::Code::opposing_edges)
                    throw CycleError(v.message);
            throw GraphError(report.front().message);
        }
        variables_ = std::move(spec.variables);
        std::sort(variables_.begin(), variables_.end(),
                  [](const Variable& a, const Variable& b) { return a.name < b.name; });
        edges_ = std::move(spec.edges);
        std::sort(edges_.begin(), edges_.end());
        exposure_ = std::move(spec.exposure);
        outcome_ = std::move(spec.outcome);

        const auto n = variables_.size();
        parents_.assign(n, {});
        children_.assign(n, {});
        for (const auto& e : edges_) {
            auto f = index(e.from);
            auto t = index(e.to);
            children_[f].push_back(t);
            parents_[t].push_back(f);
        }
        for (auto& p : parents_) std::sort(p.begin(), p.end());
        for (auto& c : children_) std::sort(c.begin(), c.end());
        topo_ = detail::kahn(n, children_).first;
    }

    std::size_t size() const noexcept { return variables_.size(); }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::optional<std::string>& exposure() const noexcept { return exposure_; }
    const std::optional<std::string>& outcome() const noexcept { return outcome_; }

    std::optional<std::size_t> find(std::string_view name) const {
        auto it = std::lower_bound(variables_.begin(), variables_.end(), name,
                                   [](const Variable& v, std::string_view n) { return v.name < n; });
        if (it == variables_.end() || it->name != name) return std::nullopt;
        return static_cast<std::size_t>(it - variables_.begin());
    }

    bool contains(std::string_view name) const { return find(name).has_value(); }

    std::size_t index(std::string_view name) const {
        auto i = find(name);
        if (!i) throw UnknownVariable(std::string(name));
        return *i;
    }

    const std::string& name(std::size_t i) const { return variables_.at(i).name; }
    bool is_latent(std::size_t i) const { return variables_.at(i).kind == VariableKind::latent; }
    bool is_latent(std::string_view name) const { return is_latent(index(name)); }

    const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
    const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }

    bool has_edge(std::size_t from, std::size_t to) const {
        const auto& c = children_.at(from);
        return std::binary_search(c.begin(), c.end(), to);
    }
    bool has_edge(std::string_view from, std::string_view to) const {
        auto f = find(from);
        auto t = find(to);
        return f && t && has_edge(*f, *t);
    }
    bool adjacent(std::size_t a, std::size_t b) const { return has_edge(a, b) || has_edge(b, a); }

    /// Lexicographically smallest topological order (by variable index).
    const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }

    VarSet observed_names() const {
        VarSet out;
        for (const auto& v : variables_)
            if (v.kind == VariableKind::observed) out.push_back(v.name);
        return out;
    }

    DagSpec spec() const { return DagSpec{variables_, edges_, exposure_, outcome_}; }

    bool operator==(const CausalDag& other) const {
        return variables_ == other.variables_ && edges_ == other.edges_ && exposure_ == other.exposure_ &&
               outcome_ == other.outcome_;
    }

private:
    std::vector<Variable> variables_;
    std::vector<Edge> edges_;
    std::optional<std::string> exposure_;
    std::optional<std::string> outcome_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> topo_;
};

inline std::vector<Violation> validate_dag(const CausalDag& dag) { return validate_dag(dag.spec()); }

// ---------------------------------------------------------------------------
// Ancestry

/// Mask of all ancestors of `seeds`; seeds themselves are included.
inline std::vector<char> ancestor_mask(const CausalDag& dag, const std::vector<std::size_t>& seeds) {
    std::vector<char> mask(dag.size(), 0);
    std::vector<std::size_t> stack(seeds.begin(), seeds.end());
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (mask[v]) continue;
        mask[v] = 1;
        for (auto p : dag.parents(v)) stack.push_back(p);
    }
    return mask;
}

/// Mask of all descendants of `seeds`; seeds themselves are included.
inline std::vector<char> descendant_mask(const CausalDag& dag, const std::vector<std::size_t>& seeds) {
    std::vector<char> mask(dag.size(), 0);
    std::vector<std::size_t> stack(seeds.begin(), seeds.end());
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (mask[v]) continue;
        mask[v] = 1;
        for (auto c : dag.children(v)) stack.push_back(c);
    }
    return mask;
}

enum class Relation { parents, children, ancestors, descendants };

/// Ancestors and descendants exclude `v` itself.
inline VarSet relatives(const CausalDag& dag, std::string_view v, Relation relation) {
    const auto i = dag.index(v);
    VarSet out;
    switch (relation) {
    case Relation::parents:
        for (auto p : dag.parents(i)) out.push_back(dag.name(p));
        break;
    case Relation::children:
        for (auto c : dag.children(i)) out.push_back(dag.name(c));
        break;
    case Relation::ancestors:
    case Relation::descendants: {
        auto mask = relation == Relation::ancestors ? ancestor_mask(dag, {i}) : descendant_mask(dag, {i});
        mask[i] = 0;
        for (std::size_t k = 0; k < mask.size(); ++k)
            if (mask[k]) out.push_back(dag.name(k));
        break;
    }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text format
//
//   A -> B            edge (declares both ends as observed variables)
//   node A            declares an observed variable (needed for isolated nodes)
//   latent A          declares or marks A as latent
//   describe A text   free-text description of A
//   exposure A        marks the exposure
//   outcome A         marks the outcome
//   # ...             comment; blank lines are ignored

namespace detail {

struct Token {
    std::string text;
    std::size_t column;
};

inline std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        auto start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        out.push_back({std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

} // namespace detail

inline DagSpec parse_dag_spec(std::string_view text) {
    struct Pending {
        VariableKind kind = VariableKind::observed;
        bool explicitly_declared = false;
        std::string description;
    };
    std::map<std::string, Pending> vars;
    std::vector<std::string> order;
    std::vector<Edge> edges;
    std::optional<std::string> exposure;
    std::optional<std::string> outcome;

    auto touch = [&](const std::string& name) -> Pending& {
        auto [it, inserted] = vars.try_emplace(name);
        if (inserted) order.push_back(name);
        return it->second;
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        auto hash = raw.find('#');
        auto line = raw.substr(0, hash);
        auto tokens = detail::tokenize(line);
        if (tokens.empty()) continue;

        auto need_name = [&](const detail::Token& t) -> const std::string& {
            if (!is_valid_name(t.text))
                throw ParseError(line_no, t.column, "invalid variable name '" + t.text + "' (allowed: [A-Za-z0-9_])");
            return t.text;
        };

        const auto& head = tokens[0].text;
        if (tokens.size() == 3 && tokens[1].text == "->") {
            const auto& from = need_name(tokens[0]);
            const auto& to = need_name(tokens[2]);
            touch(from);
            touch(to);
            edges.push_back({from, to});
        } else if (head == "describe") {
            if (tokens.size() < 2) throw ParseError(line_no, tokens[0].column, "expected a variable name after 'describe'");
            const auto& name = need_name(tokens[1]);
            auto& p = touch(name);
            std::string desc;
            if (tokens.size() > 2) {
                auto start = tokens[2].column - 1;
                desc = std::string(line.substr(start));
                while (!desc.empty() && (desc.back() == ' ' || desc.back() == '\t' || desc.back() == '\r'))
                    desc.pop_back();
            }
            p.description = desc;
        } else if (head == "node" || head == "latent" || head == "exposure" || head == "outcome") {
            if (tokens.size() != 2)
                throw ParseError(line_no, tokens.size() < 2 ? tokens[0].column + head.size() : tokens[2].column,
                                 "'" + head + "' takes exactly one variable name");
            const auto& name = need_name(tokens[1]);
            if (head == "node" || head == "latent") {
                auto& p = touch(name);
                if (p.explicitly_declared)
                    throw ParseError(line_no, tokens[1].column, "duplicate variable declaration '" + name + "'");
                p.explicitly_declared = true;
                if (head == "latent") p.kind = VariableKind::latent;
            } else {
                auto& slot = head == "exposure" ? exposure : outcome;
                if (slot) throw ParseError(line_no, tokens[0].column, head + " already set to '" + *slot + "'");
                slot = name;
            }
        } else if (tokens.size() >= 2 && tokens[1].text == "->") {
            throw ParseError(line_no, tokens.size() > 3 ? tokens[3].column : tokens[1].column,
                             "an edge statement has the form '<name> -> <name>'");
        } else {
            throw ParseError(line_no, tokens[0].column, "unknown statement '" + head + "'");
        }
    }

    DagSpec spec;
    for (const auto& name : order) {
        const auto& p = vars.at(name);
        spec.variables.push_back({name, p.kind, p.description});
    }
    spec.edges = std::move(edges);
    spec.exposure = std::move(exposure);
    spec.outcome = std::move(outcome);
    return spec;
}

inline CausalDag parse_dag(std::string_view text) { return CausalDag(parse_dag_spec(text)); }

/// Canonical form: declarations sorted by name, then descriptions, roles and
/// edges sorted by (from, to).
inline std::string serialize_dag(const CausalDag& dag) {
    std::ostringstream out;
    for (const auto& v : dag.variables())
        out << (v.kind == VariableKind::latent ? "latent " : "node ") << v.name << '\n';
    for (const auto& v : dag.variables())
        if (!v.description.empty()) out << "describe " << v.name << ' ' << v.description << '\n';
    if (dag.exposure()) out << "exposure " << *dag.exposure() << '\n';
    if (dag.outcome()) out << "outcome " << *dag.outcome() << '\n';
    for (const auto& e : dag.edges()) out << e.from << " -> " << e.to << '\n';
    return out.str();
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

/// Content digest of the canonical serialization.
inline std::string dag_fingerprint(const CausalDag& dag) { return hex64(fnv1a64(serialize_dag(dag))); }

} // namespace cidag
