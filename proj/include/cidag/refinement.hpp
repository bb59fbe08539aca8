#pragma once

// Guess-and-test refinement: diagnose a rejected implication, propose
// structural edits that would explain the dependence, test the claims each
// edit predicts, apply one and re-evaluate until the DAG agrees with the data.

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cidag/dataset.hpp"
#include "cidag/dsep.hpp"
#include "cidag/error.hpp"
#include "cidag/graph.hpp"
#include "cidag/implications.hpp"
#include "cidag/stats.hpp"

namespace cidag {

inline const char* to_string(EditKind k) {
    switch (k) {
    case EditKind::add_edge: return "add_edge";
    case EditKind::remove_edge: return "remove_edge";
    case EditKind::reverse_edge: return "reverse_edge";
    }
    return "?";
}

inline EditKind edit_kind_from_string(const std::string& s) {
    if (s == "add_edge") return EditKind::add_edge;
    if (s == "remove_edge") return EditKind::remove_edge;
    if (s == "reverse_edge") return EditKind::reverse_edge;
    throw InvalidArgument("unknown edit kind '" + s + "'");
}

/// Applies one edit; the input DAG is untouched when the result would be invalid.
inline CausalDag apply_edit(const CausalDag& dag, const DagEdit& edit) {
    dag.index(edit.from);
    dag.index(edit.to);
    auto spec = dag.spec();
    auto& edges = spec.edges;
    const Edge e{edit.from, edit.to};
    auto it = std::find(edges.begin(), edges.end(), e);
    switch (edit.kind) {
    case EditKind::add_edge:
        if (it != edges.end()) throw GraphError("edge " + edit.from + " -> " + edit.to + " already exists");
        edges.push_back(e);
        break;
    case EditKind::remove_edge:
        if (it == edges.end()) throw GraphError("no edge " + edit.from + " -> " + edit.to + " to remove");
        edges.erase(it);
        break;
    case EditKind::reverse_edge:
        if (it == edges.end()) throw GraphError("no edge " + edit.from + " -> " + edit.to + " to reverse");
        *it = Edge{edit.to, edit.from};
        break;
    }
    return CausalDag(std::move(spec));
}

inline std::string describe(const DagEdit& e) {
    switch (e.kind) {
    case EditKind::add_edge: return "add " + e.from + " -> " + e.to;
    case EditKind::remove_edge: return "remove " + e.from + " -> " + e.to;
    case EditKind::reverse_edge: return "reverse " + e.from + " -> " + e.to + " into " + e.to + " -> " + e.from;
    }
    return {};
}

enum class Mechanism { collider_to_chain, chain_to_collider, add_direct_edge, reverse_edge };

inline const char* to_string(Mechanism m) {
    switch (m) {
    case Mechanism::collider_to_chain: return "collider_to_chain";
    case Mechanism::chain_to_collider: return "chain_to_collider";
    case Mechanism::add_direct_edge: return "add_direct_edge";
    case Mechanism::reverse_edge: return "reverse_edge";
    }
    return "?";
}

inline Mechanism mechanism_from_string(const std::string& s) {
    for (auto m : {Mechanism::collider_to_chain, Mechanism::chain_to_collider, Mechanism::add_direct_edge,
                   Mechanism::reverse_edge})
        if (s == to_string(m)) return m;
    throw InvalidArgument("unknown mechanism '" + s + "'");
}

struct EditProposal {
    DagEdit edit;
    Mechanism mechanism = Mechanism::add_direct_edge;
    std::vector<IndependenceClaim> followup_claims;
    std::string rationale;
};

struct FailureDiagnosis {
    IndependenceClaim failed_claim;
    std::vector<Path> connecting_paths;
    std::vector<EditProposal> candidates;
};

namespace detail {

inline std::size_t topo_position(const CausalDag& dag, std::size_t v) {
    const auto& order = dag.topological_order();
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), v) - order.begin());
}

inline IndependenceClaim with_node(IndependenceClaim c, const std::string& node, bool add) {
    if (add)
        c.conditioning.push_back(node);
    else
        c.conditioning.erase(std::remove(c.conditioning.begin(), c.conditioning.end(), node), c.conditioning.end());
    return claim_canonicalize(std::move(c));
}

} // namespace detail

/// Candidate edits that would make `failed` no longer implied. Fingerprints in
/// `visited` are skipped so a session never returns to an earlier DAG.
inline FailureDiagnosis diagnose_failure(const CausalDag& dag, const IndependenceClaim& failed,
                                         const std::set<std::string>& visited = {}) {
    const auto claim = claim_canonicalize(failed);
    const auto implied = implied_independencies(dag);
    if (!std::binary_search(implied.claims.begin(), implied.claims.end(), claim))
        throw InvalidArgument("'" + to_string(claim) + "' is not an implication of this DAG");

    FailureDiagnosis out;
    out.failed_claim = claim;
    out.connecting_paths = enumerate_paths(dag, claim.x, claim.y);
    const auto& z = claim.conditioning;
    auto in_z = [&](const std::string& v) { return std::binary_search(z.begin(), z.end(), v); };

    std::vector<EditProposal> reorient;
    auto consider = [&](std::vector<EditProposal>& bucket, EditProposal p) {
        for (const auto& q : bucket)
            if (q.edit == p.edit && q.mechanism == p.mechanism) return;
        CausalDag edited;
        try {
            edited = apply_edit(dag, p.edit);
        } catch (const GraphError&) {
            return;  // would create a cycle
        }
        if (visited.count(dag_fingerprint(edited))) return;
        if (is_d_separated(edited, {claim.x}, {claim.y}, z)) return;
        bucket.push_back(std::move(p));
    };

    std::vector<EditProposal> to_chain, to_collider;
    for (const auto& path : out.connecting_paths) {
        for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
            const auto& a = path.nodes[i - 1];
            const auto& c = path.nodes[i];
            const auto& b = path.nodes[i + 1];
            const bool into_from_a = path.directions[i - 1] == Step::forward;
            const bool into_from_b = path.directions[i] == Step::backward;
            if (into_from_a && into_from_b) {
                if (dag.is_latent(c)) continue;  // no observable confirmation
                auto follow = detail::with_node(claim, c, true);
                for (const auto* end : {&a, &b}) {
                    EditProposal p;
                    p.edit = {EditKind::reverse_edge, *end, c,
                              "treat " + c + " as a chain node rather than a collider"};
                    p.mechanism = Mechanism::collider_to_chain;
                    p.followup_claims = {follow};
                    p.rationale = c + " is a collider on " + claim.x + " ... " + claim.y +
                                  "; if it is a chain node, conditioning on it should separate them";
                    consider(to_chain, std::move(p));
                }
            } else if (in_z(c) && into_from_a != into_from_b) {
                // chain: reverse the edge leaving c along the path
                const auto& next = into_from_a ? b : a;
                EditProposal p;
                p.edit = {EditKind::reverse_edge, c, next, "treat " + c + " as a collider rather than a chain node"};
                p.mechanism = Mechanism::chain_to_collider;
                p.followup_claims = {detail::with_node(claim, c, false)};
                p.rationale = c + " is a conditioned chain node; if it is a collider, " + claim.x + " and " +
                              claim.y + " should be independent without it";
                consider(to_collider, std::move(p));
            }
        }
    }

    auto by_edit = [](const EditProposal& l, const EditProposal& r) {
        return std::tie(l.edit.from, l.edit.to, l.followup_claims) < std::tie(r.edit.from, r.edit.to, r.followup_claims);
    };
    std::stable_sort(to_chain.begin(), to_chain.end(), by_edit);
    std::stable_sort(to_collider.begin(), to_collider.end(), by_edit);
    out.candidates = std::move(to_chain);
    out.candidates.insert(out.candidates.end(), to_collider.begin(), to_collider.end());

    const auto xi = dag.index(claim.x);
    const auto yi = dag.index(claim.y);
    const bool x_first = detail::topo_position(dag, xi) < detail::topo_position(dag, yi);
    EditProposal direct;
    direct.edit = {EditKind::add_edge, x_first ? claim.x : claim.y, x_first ? claim.y : claim.x,
                   "direct dependence between " + claim.x + " and " + claim.y};
    direct.mechanism = Mechanism::add_direct_edge;
    direct.rationale = "no separating set explains the dependence; add a direct edge";
    std::vector<EditProposal> direct_bucket;
    consider(direct_bucket, std::move(direct));
    out.candidates.insert(out.candidates.end(), direct_bucket.begin(), direct_bucket.end());
    return out;
}

enum class Policy { automatic, interactive };
enum class Decider { automatic, human };
enum class SessionStatus { running, consistent, exhausted, aborted };

inline const char* to_string(Decider d) { return d == Decider::automatic ? "auto" : "human"; }
inline const char* to_string(SessionStatus s) {
    switch (s) {
    case SessionStatus::running: return "running";
    case SessionStatus::consistent: return "consistent";
    case SessionStatus::exhausted: return "exhausted";
    case SessionStatus::aborted: return "aborted";
    }
    return "?";
}

struct SessionStep {
    std::string dag_fingerprint;
    EvaluationSummary summary;
    std::vector<TestResult> results;
    std::optional<IndependenceClaim> failed_claim;
    std::optional<EditProposal> applied;
    std::vector<TestResult> followup_results;  // for the applied proposal
    Decider decider = Decider::automatic;
};

struct RefinementSession {
    CausalDag initial_dag;
    TestConfig config;
    std::size_t max_iterations = 25;
    std::vector<SessionStep> steps;
    SessionStatus status = SessionStatus::running;
    CausalDag final_dag;
    std::vector<Edge> undetermined_orientations;
};

/// Edges whose reversal keeps the DAG acyclic and leaves every implied claim
/// unchanged: no test could tell the two orientations apart.
inline std::vector<Edge> undetermined_orientations(const CausalDag& dag) {
    const auto base = implied_independencies(dag).claims;
    std::vector<Edge> out;
    for (const auto& e : dag.edges()) {
        try {
            auto flipped = apply_edit(dag, {EditKind::reverse_edge, e.from, e.to, {}});
            if (implied_independencies(flipped).claims == base) out.push_back(e);
        } catch (const GraphError&) {
        }
    }
    return out;
}

/// One refinement session, advanced one decision at a time. refine() drives
/// it with a policy; the HTTP service drives it from client requests.
class Refiner {
public:
    Refiner(CausalDag start, DatasetTable data, TestConfig config, std::size_t max_iterations = 25)
        : data_(std::move(data)), config_(config) {
        config_.validate();
        require_coverage(data_, start);
        session_.initial_dag = start;
        session_.config = config_;
        session_.max_iterations = max_iterations;
        session_.final_dag = std::move(start);
        visited_.insert(dag_fingerprint(session_.final_dag));
        evaluate();
    }

    const RefinementSession& session() const noexcept { return session_; }
    const CausalDag& current() const noexcept { return session_.final_dag; }
    bool finished() const noexcept { return session_.status != SessionStatus::running; }
    const std::optional<FailureDiagnosis>& pending() const noexcept { return pending_; }
    const DatasetTable& data() const noexcept { return data_; }
    TestCache& cache() noexcept { return cache_; }

    std::vector<TestResult> followups(std::size_t candidate) {
        const auto& p = proposal(candidate);
        std::vector<TestResult> out;
        for (const auto& c : p.followup_claims) out.push_back(cached_test(data_, c, config_, &cache_));
        return out;
    }

    /// First candidate whose follow-up claims all survive; the direct edge
    /// (last, no follow-ups) is the fallback.
    std::optional<std::size_t> automatic_choice() {
        if (!pending_) return std::nullopt;
        for (std::size_t i = 0; i < pending_->candidates.size(); ++i) {
            auto r = followups(i);
            if (std::none_of(r.begin(), r.end(), [](const TestResult& t) { return t.rejected(); })) return i;
        }
        return std::nullopt;
    }

    void choose(std::size_t candidate, Decider who) {
        auto chosen = proposal(candidate);
        auto& step = session_.steps.back();
        step.followup_results = followups(candidate);
        step.failed_claim = pending_->failed_claim;
        step.applied = chosen;
        step.decider = who;
        session_.final_dag = apply_edit(session_.final_dag, chosen.edit);
        visited_.insert(dag_fingerprint(session_.final_dag));
        pending_.reset();
        evaluate();
    }

    void abort() {
        if (finished()) return;
        pending_.reset();
        finish(SessionStatus::aborted);
    }

private:
    const EditProposal& proposal(std::size_t candidate) const {
        if (!pending_) throw InvalidArgument("no pending diagnosis");
        if (candidate >= pending_->candidates.size())
            throw InvalidArgument("candidate " + std::to_string(candidate) + " out of range");
        return pending_->candidates[candidate];
    }

    void evaluate() {
        auto ev = evaluate_dag(data_, session_.final_dag, config_, &cache_);
        SessionStep step;
        step.dag_fingerprint = ev.hypotheses.dag_fingerprint;
        step.summary = ev.summary;
        step.results = ev.results;
        session_.steps.push_back(std::move(step));
        if (ev.consistent()) return finish(SessionStatus::consistent);
        if (session_.steps.size() > session_.max_iterations) return finish(SessionStatus::exhausted);
        auto first = std::find_if(ev.results.begin(), ev.results.end(),
                                  [](const TestResult& r) { return r.rejected() && !r.degenerate; });
        auto diagnosis = diagnose_failure(session_.final_dag, first->claim, visited_);
        session_.steps.back().failed_claim = first->claim;
        if (diagnosis.candidates.empty()) return finish(SessionStatus::exhausted);
        pending_ = std::move(diagnosis);
    }

    void finish(SessionStatus s) {
        session_.status = s;
        session_.undetermined_orientations = undetermined_orientations(session_.final_dag);
    }

    DatasetTable data_;
    TestConfig config_;
    TestCache cache_;
    RefinementSession session_;
    std::set<std::string> visited_;
    std::optional<FailureDiagnosis> pending_;
};

/// Interactive decision source: gets the diagnosis and the follow-up results
/// of every candidate; returns the chosen index or nullopt to abort.
using DecisionCallback =
    std::function<std::optional<std::size_t>(const FailureDiagnosis&, const std::vector<std::vector<TestResult>>&)>;

struct RefineOptions {
    Policy policy = Policy::automatic;
    std::size_t max_iterations = 25;
    DecisionCallback decide;
};

inline RefinementSession refine(const CausalDag& dag, const DatasetTable& data, const TestConfig& config,
                                const RefineOptions& options = {}) {
    if (options.policy == Policy::interactive && !options.decide)
        throw InvalidArgument("interactive refinement needs a decision callback");
    Refiner r(dag, data, config, options.max_iterations);
    while (!r.finished()) {
        if (options.policy == Policy::automatic) {
            auto pick = r.automatic_choice();
            r.choose(pick.value_or(r.pending()->candidates.size() - 1), Decider::automatic);
            continue;
        }
        std::vector<std::vector<TestResult>> follow;
        for (std::size_t i = 0; i < r.pending()->candidates.size(); ++i) follow.push_back(r.followups(i));
        auto pick = options.decide(*r.pending(), follow);
        if (!pick) {
            r.abort();
            break;
        }
        r.choose(*pick, Decider::human);
    }
    return r.session();
}

inline ordered_json to_json(const DagEdit& e) {
    ordered_json j;
    j["kind"] = to_string(e.kind);
    j["from"] = e.from;
    j["to"] = e.to;
    j["rationale"] = e.rationale;
    return j;
}

inline DagEdit edit_from_json(const ordered_json& j) {
    DagEdit e;
    e.kind = edit_kind_from_string(j.at("kind").get<std::string>());
    e.from = j.at("from").get<std::string>();
    e.to = j.at("to").get<std::string>();
    if (j.contains("rationale")) e.rationale = j.at("rationale").get<std::string>();
    return e;
}

inline ordered_json to_json(const Path& p) {
    ordered_json j;
    j["nodes"] = p.nodes;
    std::string text = p.nodes.front();
    for (std::size_t i = 0; i < p.directions.size(); ++i)
        text += (p.directions[i] == Step::forward ? " -> " : " <- ") + p.nodes[i + 1];
    j["text"] = text;
    return j;
}

inline ordered_json to_json(const EditProposal& p) {
    ordered_json j;
    j["edit"] = to_json(p.edit);
    j["mechanism"] = to_string(p.mechanism);
    j["followup_claims"] = ordered_json::array();
    for (const auto& c : p.followup_claims) {
        auto cj = to_json(c);
        cj["text"] = to_string(c);
        j["followup_claims"].push_back(std::move(cj));
    }
    j["rationale"] = p.rationale;
    return j;
}

inline EditProposal proposal_from_json(const ordered_json& j) {
    EditProposal p;
    p.edit = edit_from_json(j.at("edit"));
    p.mechanism = mechanism_from_string(j.at("mechanism").get<std::string>());
    for (const auto& c : j.at("followup_claims")) p.followup_claims.push_back(claim_from_json(c));
    if (j.contains("rationale")) p.rationale = j.at("rationale").get<std::string>();
    return p;
}

inline ordered_json to_json(const FailureDiagnosis& d) {
    ordered_json j;
    j["failed_claim"] = to_json(d.failed_claim);
    j["failed_claim"]["text"] = to_string(d.failed_claim);
    j["connecting_paths"] = ordered_json::array();
    for (const auto& p : d.connecting_paths) j["connecting_paths"].push_back(to_json(p));
    j["candidates"] = ordered_json::array();
    for (const auto& c : d.candidates) j["candidates"].push_back(to_json(c));
    return j;
}

inline ordered_json to_json(const RefinementSession& s) {
    ordered_json j;
    j["status"] = to_string(s.status);
    j["initial_dag"] = serialize_dag(s.initial_dag);
    j["initial_fingerprint"] = dag_fingerprint(s.initial_dag);
    j["config"] = to_json(s.config);
    j["max_iterations"] = s.max_iterations;
    j["steps"] = ordered_json::array();
    for (const auto& st : s.steps) {
        ordered_json sj;
        sj["dag_fingerprint"] = st.dag_fingerprint;
        sj["summary"] = to_json(st.summary);
        sj["results"] = ordered_json::array();
        for (const auto& r : st.results) sj["results"].push_back(to_json(r));
        if (st.failed_claim) {
            sj["failed_claim"] = to_json(*st.failed_claim);
            sj["failed_claim"]["text"] = to_string(*st.failed_claim);
        } else {
            sj["failed_claim"] = nullptr;
        }
        if (st.applied) {
            sj["applied"] = to_json(*st.applied);
            sj["decider"] = to_string(st.decider);
            sj["followup_results"] = ordered_json::array();
            for (const auto& r : st.followup_results) sj["followup_results"].push_back(to_json(r));
        } else {
            sj["applied"] = nullptr;
        }
        j["steps"].push_back(std::move(sj));
    }
    j["final_dag"] = serialize_dag(s.final_dag);
    j["final_fingerprint"] = dag_fingerprint(s.final_dag);
    j["undetermined_orientations"] = ordered_json::array();
    for (const auto& e : s.undetermined_orientations) j["undetermined_orientations"].push_back({e.from, e.to});
    return j;
}

/// Rebuilds the final DAG of a journal by replaying its edits from the
/// initial DAG, checking every recorded fingerprint on the way.
inline CausalDag replay_journal(const ordered_json& journal) {
    auto dag = parse_dag(journal.at("initial_dag").get<std::string>());
    for (const auto& st : journal.at("steps")) {
        if (st.at("dag_fingerprint").get<std::string>() != dag_fingerprint(dag))
            throw Error("journal fingerprint mismatch at step with fingerprint " +
                        st.at("dag_fingerprint").get<std::string>());
        if (!st.at("applied").is_null()) dag = apply_edit(dag, edit_from_json(st.at("applied").at("edit")));
    }
    return dag;
}

} // namespace cidag
