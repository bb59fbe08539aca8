#pragma once

// Linear-Gaussian structural equation data for a DAG: each variable is a
// weighted sum of its parents plus independent Gaussian noise. Latent
// variables take part in generation and are dropped from the output.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cidag/dataset.hpp"
#include "cidag/graph.hpp"

namespace cidag {

struct SemOptions {
    double weight_min = 0.5;  // |weight| drawn uniformly from [weight_min, weight_max]
    double weight_max = 1.0;
    bool random_sign = true;
    double noise_sd = 1.0;
};

struct LinearSem {
    CausalDag dag;
    Eigen::MatrixXd weights;  // weights(parent, child), indices as in dag
};

inline LinearSem random_linear_sem(const CausalDag& dag, std::mt19937_64& rng, const SemOptions& opt = {}) {
    if (!(opt.weight_min >= 0 && opt.weight_max >= opt.weight_min)) throw InvalidArgument("bad SEM weight range");
    const auto n = static_cast<Eigen::Index>(dag.size());
    LinearSem sem{dag, Eigen::MatrixXd::Zero(n, n)};
    std::uniform_real_distribution<double> magnitude(opt.weight_min, opt.weight_max);
    std::bernoulli_distribution flip(0.5);
    for (const auto& e : dag.edges()) {
        double w = magnitude(rng);
        if (opt.random_sign && flip(rng)) w = -w;
        sem.weights(static_cast<Eigen::Index>(dag.index(e.from)), static_cast<Eigen::Index>(dag.index(e.to))) = w;
    }
    return sem;
}

inline DatasetTable simulate(const LinearSem& sem, std::size_t rows, std::mt19937_64& rng, const SemOptions& opt = {}) {
    const auto& dag = sem.dag;
    const auto n = static_cast<Eigen::Index>(rows);
    Eigen::MatrixXd all(n, static_cast<Eigen::Index>(dag.size()));
    std::normal_distribution<double> noise(0.0, opt.noise_sd);
    for (auto v : dag.topological_order()) {
        const auto vi = static_cast<Eigen::Index>(v);
        for (Eigen::Index r = 0; r < n; ++r) all(r, vi) = noise(rng);
        for (auto p : dag.parents(v)) {
            const auto pi = static_cast<Eigen::Index>(p);
            all.col(vi) += sem.weights(pi, vi) * all.col(pi);
        }
    }
    std::vector<std::string> names;
    std::vector<Eigen::Index> keep;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        if (dag.is_latent(v)) continue;
        names.push_back(dag.name(v));
        keep.push_back(static_cast<Eigen::Index>(v));
    }
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = all.col(keep[c]);
    return DatasetTable(std::move(names), std::move(out));
}

/// Fresh weights and data from one seed.
inline DatasetTable simulate_linear_gaussian(const CausalDag& dag, std::size_t rows, std::uint64_t seed,
                                             const SemOptions& opt = {}) {
    std::mt19937_64 rng(seed);
    auto sem = random_linear_sem(dag, rng, opt);
    return simulate(sem, rows, rng, opt);
}

} // namespace cidag
