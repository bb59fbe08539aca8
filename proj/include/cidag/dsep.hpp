#pragma once

// d-separation: path enumeration and per-path blocking (the slow, explainable
// route), reachability-based separation (the production route), backdoor
// paths, adjustment sets and minimal separators.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cidag/error.hpp"
#include "cidag/graph.hpp"

namespace cidag {

/// Direction of one step along a path: forward means nodes[i] -> nodes[i+1].
enum class Step { forward, backward };

struct Path {
    std::vector<std::string> nodes;
    std::vector<Step> directions;

    bool operator==(const Path&) const = default;
};

struct PathStatus {
    bool open = true;
    VarSet blocking_nodes;
    VarSet colliders_opened;
};

inline constexpr std::size_t default_path_limit = 10000;

namespace detail {

using IndexPath = std::vector<std::size_t>;

inline std::vector<IndexPath> index_paths(const CausalDag& dag, std::size_t x, std::size_t y, std::size_t limit) {
    std::vector<IndexPath> out;
    std::vector<char> on_path(dag.size(), 0);
    IndexPath current{x};
    on_path[x] = 1;

    std::vector<std::vector<std::size_t>> neighbours(dag.size());
    for (std::size_t v = 0; v < dag.size(); ++v) {
        auto& nb = neighbours[v];
        nb.insert(nb.end(), dag.parents(v).begin(), dag.parents(v).end());
        nb.insert(nb.end(), dag.children(v).begin(), dag.children(v).end());
        std::sort(nb.begin(), nb.end());
    }

    std::function<void(std::size_t)> walk = [&](std::size_t v) {
        for (auto w : neighbours[v]) {
            if (on_path[w]) continue;
            current.push_back(w);
            if (w == y) {
                if (out.size() >= limit)
                    throw Error("path enumeration exceeded the limit of " + std::to_string(limit) + " paths");
                out.push_back(current);
            } else {
                on_path[w] = 1;
                walk(w);
                on_path[w] = 0;
            }
            current.pop_back();
        }
    };
    walk(x);
    std::sort(out.begin(), out.end());
    return out;
}

inline Path to_path(const CausalDag& dag, const IndexPath& ip) {
    Path p;
    for (auto i : ip) p.nodes.push_back(dag.name(i));
    for (std::size_t k = 0; k + 1 < ip.size(); ++k)
        p.directions.push_back(dag.has_edge(ip[k], ip[k + 1]) ? Step::forward : Step::backward);
    return p;
}

inline std::vector<std::size_t> indices_of(const CausalDag& dag, const VarSet& names) {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(dag.index(n));
    return out;
}

/// Calls fn(subset) for every subset of `pool` in order of size, then
/// lexicographically. fn returns false to stop the enumeration.
template <typename Fn>
void for_each_subset_by_size(const std::vector<std::size_t>& pool, Fn&& fn) {
    const auto m = pool.size();
    std::vector<std::size_t> pick;
    for (std::size_t k = 0; k <= m; ++k) {
        pick.resize(k);
        for (std::size_t i = 0; i < k; ++i) pick[i] = i;
        while (true) {
            std::vector<std::size_t> subset(k);
            for (std::size_t i = 0; i < k; ++i) subset[i] = pool[pick[i]];
            if (!fn(subset)) return;
            // next combination
            std::size_t i = k;
            while (i > 0 && pick[i - 1] == m - k + i - 1) --i;
            if (i == 0) break;
            ++pick[i - 1];
            for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
        }
    }
}

inline bool includes_sorted(const std::vector<std::size_t>& super, const std::vector<std::size_t>& sub) {
    return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

} // namespace detail

/// All simple paths between x and y, sorted lexicographically by node sequence.
inline std::vector<Path> enumerate_paths(const CausalDag& dag, std::string_view x, std::string_view y,
                                         std::size_t limit = default_path_limit) {
    auto xi = dag.index(x);
    auto yi = dag.index(y);
    if (xi == yi) throw InvalidArgument("path endpoints must differ");
    std::vector<Path> out;
    for (const auto& ip : detail::index_paths(dag, xi, yi, limit)) out.push_back(detail::to_path(dag, ip));
    return out;
}

inline PathStatus path_status(const CausalDag& dag, const Path& path, const VarSet& conditioning) {
    if (path.nodes.size() < 2 || path.directions.size() + 1 != path.nodes.size())
        throw InvalidArgument("path needs at least two nodes and one direction per step");
    std::vector<std::size_t> idx;
    for (const auto& n : path.nodes) idx.push_back(dag.index(n));
    {
        auto sorted = idx;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidArgument("path repeats a node");
    }
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        bool ok = path.directions[k] == Step::forward ? dag.has_edge(idx[k], idx[k + 1])
                                                      : dag.has_edge(idx[k + 1], idx[k]);
        if (!ok)
            throw InvalidArgument("path step " + path.nodes[k] + " - " + path.nodes[k + 1] +
                                  " does not match an edge of the DAG");
    }
    std::vector<char> in_z(dag.size(), 0);
    for (const auto& z : conditioning) in_z[dag.index(z)] = 1;
    std::vector<std::size_t> zi;
    for (std::size_t i = 0; i < in_z.size(); ++i)
        if (in_z[i]) zi.push_back(i);
    const auto opened_by_z = ancestor_mask(dag, zi);

    PathStatus status;
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        const bool collider = path.directions[k - 1] == Step::forward && path.directions[k] == Step::backward;
        const auto v = idx[k];
        if (collider) {
            if (opened_by_z[v])
                status.colliders_opened.push_back(dag.name(v));
            else
                status.blocking_nodes.push_back(dag.name(v));
        } else if (in_z[v]) {
            status.blocking_nodes.push_back(dag.name(v));
        }
    }
    status.blocking_nodes = make_varset(std::move(status.blocking_nodes));
    status.colliders_opened = make_varset(std::move(status.colliders_opened));
    status.open = status.blocking_nodes.empty();
    return status;
}

/// Reachability ("Bayes ball") test; linear in the size of the graph.
inline bool is_d_separated(const CausalDag& dag, const std::vector<std::size_t>& xs,
                           const std::vector<std::size_t>& ys, const std::vector<char>& in_z) {
    std::vector<std::size_t> zi;
    for (std::size_t i = 0; i < in_z.size(); ++i)
        if (in_z[i]) zi.push_back(i);
    const auto z_ancestor = ancestor_mask(dag, zi);

    // visited[2*v + 0]: arrived travelling up (from a child)
    // visited[2*v + 1]: arrived travelling down (from a parent)
    std::vector<char> visited(2 * dag.size(), 0);
    std::vector<char> reached(dag.size(), 0);
    std::vector<std::pair<std::size_t, int>> stack;
    for (auto x : xs) stack.emplace_back(x, 0);
    while (!stack.empty()) {
        auto [v, down] = stack.back();
        stack.pop_back();
        auto& seen = visited[2 * v + static_cast<std::size_t>(down)];
        if (seen) continue;
        seen = 1;
        if (!in_z[v]) reached[v] = 1;
        if (!down) {
            if (in_z[v]) continue;
            for (auto p : dag.parents(v)) stack.emplace_back(p, 0);
            for (auto c : dag.children(v)) stack.emplace_back(c, 1);
        } else {
            if (!in_z[v])
                for (auto c : dag.children(v)) stack.emplace_back(c, 1);
            if (z_ancestor[v])
                for (auto p : dag.parents(v)) stack.emplace_back(p, 0);
        }
    }
    return std::none_of(ys.begin(), ys.end(), [&](std::size_t y) { return reached[y]; });
}

inline bool is_d_separated(const CausalDag& dag, const VarSet& x, const VarSet& y, const VarSet& z) {
    auto xs = detail::indices_of(dag, x);
    auto ys = detail::indices_of(dag, y);
    auto zs = detail::indices_of(dag, z);
    std::vector<char> mark(dag.size(), 0);
    for (const auto* group : {&xs, &ys, &zs}) {
        for (auto i : *group) {
            if (mark[i]) throw InvalidArgument("x, y and z must be pairwise disjoint ('" + dag.name(i) + "' repeats)");
            mark[i] = 1;
        }
    }
    std::vector<char> in_z(dag.size(), 0);
    for (auto i : zs) in_z[i] = 1;
    return is_d_separated(dag, xs, ys, in_z);
}

/// Simple paths from exposure to outcome whose first edge points into the exposure.
inline std::vector<Path> backdoor_paths(const CausalDag& dag, std::string_view exposure, std::string_view outcome,
                                        std::size_t limit = default_path_limit) {
    std::vector<Path> out;
    for (auto& p : enumerate_paths(dag, exposure, outcome, limit))
        if (p.directions.front() == Step::backward) out.push_back(std::move(p));
    return out;
}

struct AdjustmentResult {
    std::vector<VarSet> sets;
    /// False when no set of observed non-descendants satisfies the backdoor criterion.
    bool admissible = true;
};

inline constexpr std::size_t max_subset_pool = 22;

/// Inclusion-minimal backdoor adjustment sets over observed variables, ordered
/// by size and then lexicographically.
inline AdjustmentResult minimal_adjustment_sets(const CausalDag& dag, std::string_view exposure,
                                                std::string_view outcome) {
    const auto x = dag.index(exposure);
    const auto y = dag.index(outcome);
    if (x == y) throw InvalidArgument("exposure and outcome must differ");
    if (dag.is_latent(x) || dag.is_latent(y)) throw InvalidArgument("exposure and outcome must be observed");

    // Backdoor graph: drop the exposure's outgoing edges.
    auto spec = dag.spec();
    std::erase_if(spec.edges, [&](const Edge& e) { return e.from == exposure; });
    const CausalDag backdoor(std::move(spec));

    const auto desc = descendant_mask(dag, {x});
    const auto anc = ancestor_mask(backdoor, {x, y});
    std::vector<std::size_t> pool;
    for (std::size_t v = 0; v < dag.size(); ++v)
        if (v != x && v != y && !dag.is_latent(v) && !desc[v] && anc[v]) pool.push_back(v);
    if (pool.size() > max_subset_pool)
        throw InvalidArgument("too many candidate adjustment variables (" + std::to_string(pool.size()) + ")");

    std::vector<std::vector<std::size_t>> found;
    detail::for_each_subset_by_size(pool, [&](const std::vector<std::size_t>& subset) {
        for (const auto& f : found)
            if (detail::includes_sorted(subset, f)) return true;
        std::vector<char> in_z(dag.size(), 0);
        for (auto v : subset) in_z[v] = 1;
        if (is_d_separated(backdoor, {x}, {y}, in_z)) found.push_back(subset);
        return true;
    });

    AdjustmentResult result;
    for (const auto& f : found) {
        VarSet s;
        for (auto v : f) s.push_back(dag.name(v));
        result.sets.push_back(std::move(s));
    }
    result.admissible = !result.sets.empty();
    return result;
}

namespace detail {

inline std::vector<std::size_t> separator_pool(const CausalDag& dag, std::size_t x, std::size_t y,
                                               const std::optional<VarSet>& restricted_to) {
    if (x == y) throw InvalidArgument("endpoints must differ");
    if (dag.adjacent(x, y))
        throw InvalidArgument("'" + dag.name(x) + "' and '" + dag.name(y) + "' are adjacent; no separator exists");
    std::vector<char> allowed(dag.size(), 0);
    if (restricted_to) {
        for (const auto& n : *restricted_to) allowed[dag.index(n)] = 1;
    } else {
        for (std::size_t v = 0; v < dag.size(); ++v) allowed[v] = !dag.is_latent(v);
    }
    // Minimal separators always lie inside the ancestors of the endpoints.
    const auto anc = ancestor_mask(dag, {x, y});
    std::vector<std::size_t> pool;
    for (std::size_t v = 0; v < dag.size(); ++v)
        if (v != x && v != y && allowed[v] && anc[v]) pool.push_back(v);
    if (pool.size() > max_subset_pool)
        throw InvalidArgument("too many candidate separator variables (" + std::to_string(pool.size()) + ")");
    return pool;
}

inline VarSet names_of(const CausalDag& dag, const std::vector<std::size_t>& idx) {
    VarSet s;
    for (auto v : idx) s.push_back(dag.name(v));
    return s;
}

} // namespace detail

/// Smallest (then lexicographically first) z within `restricted_to` that
/// d-separates x and y. Defaults to all observed variables.
inline std::optional<VarSet> find_minimal_separator(const CausalDag& dag, std::string_view x, std::string_view y,
                                                    const std::optional<VarSet>& restricted_to = std::nullopt) {
    const auto xi = dag.index(x);
    const auto yi = dag.index(y);
    const auto pool = detail::separator_pool(dag, xi, yi, restricted_to);
    std::optional<VarSet> result;
    detail::for_each_subset_by_size(pool, [&](const std::vector<std::size_t>& subset) {
        std::vector<char> in_z(dag.size(), 0);
        for (auto v : subset) in_z[v] = 1;
        if (is_d_separated(dag, {xi}, {yi}, in_z)) {
            result = detail::names_of(dag, subset);
            return false;
        }
        return true;
    });
    return result;
}

/// Every inclusion-minimal separator of x and y within `restricted_to`,
/// ordered by size and then lexicographically.
inline std::vector<VarSet> all_minimal_separators(const CausalDag& dag, std::string_view x, std::string_view y,
                                                  const std::optional<VarSet>& restricted_to = std::nullopt) {
    const auto xi = dag.index(x);
    const auto yi = dag.index(y);
    const auto pool = detail::separator_pool(dag, xi, yi, restricted_to);
    std::vector<std::vector<std::size_t>> found;
    detail::for_each_subset_by_size(pool, [&](const std::vector<std::size_t>& subset) {
        for (const auto& f : found)
            if (detail::includes_sorted(subset, f)) return true;
        std::vector<char> in_z(dag.size(), 0);
        for (auto v : subset) in_z[v] = 1;
        if (is_d_separated(dag, {xi}, {yi}, in_z)) found.push_back(subset);
        return true;
    });
    std::vector<VarSet> out;
    for (const auto& f : found) out.push_back(detail::names_of(dag, f));
    return out;
}

} // namespace cidag
