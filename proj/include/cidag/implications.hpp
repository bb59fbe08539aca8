#pragma once

// Testable implications of a DAG: one conditional-independence claim per
// inclusion-minimal observed separator of every non-adjacent observed pair.

#include <string>
#include <vector>

#include "json.hpp"

#include "cidag/dsep.hpp"
#include "cidag/graph.hpp"

namespace cidag {

/// x ⫫ y | conditioning. Canonical when x < y and conditioning is sorted.
struct IndependenceClaim {
    std::string x;
    std::string y;
    VarSet conditioning;

    auto operator<=>(const IndependenceClaim&) const = default;
};

inline IndependenceClaim claim_canonicalize(IndependenceClaim claim) {
    if (claim.x == claim.y) throw InvalidArgument("a claim needs two distinct variables, got '" + claim.x + "' twice");
    claim.conditioning = make_varset(std::move(claim.conditioning));
    for (const auto* end : {&claim.x, &claim.y})
        if (std::binary_search(claim.conditioning.begin(), claim.conditioning.end(), *end))
            throw InvalidArgument("'" + *end + "' appears both as an endpoint and in the conditioning set");
    if (claim.y < claim.x) std::swap(claim.x, claim.y);
    return claim;
}

inline std::string to_string(const IndependenceClaim& c) {
    std::string s = c.x + " _||_ " + c.y;
    if (!c.conditioning.empty()) {
        s += " |";
        for (std::size_t i = 0; i < c.conditioning.size(); ++i) s += (i ? ", " : " ") + c.conditioning[i];
    }
    return s;
}

struct UnseparablePair {
    std::string x;
    std::string y;
};

struct HypothesisSet {
    std::string dag_fingerprint;
    std::vector<IndependenceClaim> claims;
    /// Non-adjacent observed pairs that only latent variables can separate.
    std::vector<UnseparablePair> latent_only;
};

inline HypothesisSet implied_independencies(const CausalDag& dag) {
    HypothesisSet out;
    out.dag_fingerprint = dag_fingerprint(dag);
    const auto observed = dag.observed_names();
    for (std::size_t i = 0; i < observed.size(); ++i) {
        for (std::size_t j = i + 1; j < observed.size(); ++j) {
            const auto& x = observed[i];
            const auto& y = observed[j];
            if (dag.adjacent(dag.index(x), dag.index(y))) continue;
            auto separators = all_minimal_separators(dag, x, y);
            if (separators.empty()) {
                out.latent_only.push_back({x, y});
                continue;
            }
            for (auto& s : separators) out.claims.push_back({x, y, std::move(s)});
        }
    }
    std::sort(out.claims.begin(), out.claims.end());
    out.claims.erase(std::unique(out.claims.begin(), out.claims.end()), out.claims.end());
    return out;
}

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const IndependenceClaim& c) {
    ordered_json j;
    j["x"] = c.x;
    j["y"] = c.y;
    j["conditioning"] = c.conditioning;
    return j;
}

inline IndependenceClaim claim_from_json(const ordered_json& j) {
    IndependenceClaim c;
    c.x = j.at("x").get<std::string>();
    c.y = j.at("y").get<std::string>();
    if (j.contains("conditioning")) c.conditioning = j.at("conditioning").get<std::vector<std::string>>();
    return claim_canonicalize(std::move(c));
}

inline ordered_json to_json(const HypothesisSet& h) {
    ordered_json j;
    j["dag_fingerprint"] = h.dag_fingerprint;
    j["claims"] = ordered_json::array();
    for (const auto& c : h.claims) {
        auto cj = to_json(c);
        cj["text"] = to_string(c);
        j["claims"].push_back(std::move(cj));
    }
    j["latent_only_pairs"] = ordered_json::array();
    for (const auto& p : h.latent_only) j["latent_only_pairs"].push_back(ordered_json::array({p.x, p.y}));
    return j;
}

/// Canonical text form of a JSON document, shared by the CLI and the API.
inline std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

} // namespace cidag
