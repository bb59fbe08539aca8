#pragma once

// Independence tests: distance covariance with a permutation null for
// unconditional claims, kernel conditional independence (KCI) for the rest,
// and batch evaluation of a DAG's implications against a dataset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "cidag/dataset.hpp"
#include "cidag/error.hpp"
#include "cidag/graph.hpp"
#include "cidag/implications.hpp"

namespace cidag {

enum class TestMethod { distance_covariance, kernel_conditional };
enum class Decision { reject_independence, fail_to_reject };
enum class KciNull { gamma_approximation, permutation };

inline const char* to_string(TestMethod m) {
    return m == TestMethod::distance_covariance ? "distance_covariance" : "kernel_conditional";
}
inline const char* to_string(Decision d) {
    return d == Decision::reject_independence ? "reject_independence" : "fail_to_reject";
}
inline const char* to_string(KciNull n) {
    return n == KciNull::gamma_approximation ? "gamma_approximation" : "permutation";
}

struct TestConfig {
    double alpha = 0.05;
    std::size_t permutations = 999;
    std::uint64_t rng_seed = 0;
    std::optional<double> kernel_bandwidth;  // nullopt: median heuristic
    double kci_regularization = 1e-3;
    KciNull kci_null = KciNull::gamma_approximation;

    void validate() const {
        if (!(alpha > 0 && alpha < 1)) throw InvalidArgument("alpha must lie in (0, 1)");
        if (permutations < 99) throw InvalidArgument("at least 99 permutations are required");
        if (kernel_bandwidth && !(*kernel_bandwidth > 0)) throw InvalidArgument("kernel bandwidth must be positive");
        if (!(kci_regularization > 0)) throw InvalidArgument("KCI regularization must be positive");
    }
};

/// Everything except the seed, which is mixed per claim anyway.
inline std::string config_digest(const TestConfig& c) {
    std::string s = format_number(c.alpha) + ";" + std::to_string(c.permutations) + ";" + std::to_string(c.rng_seed) +
                    ";" + (c.kernel_bandwidth ? format_number(*c.kernel_bandwidth) : std::string("median")) + ";" +
                    format_number(c.kci_regularization) + ";" + to_string(c.kci_null);
    return hex64(fnv1a64(s));
}

struct TestResult {
    IndependenceClaim claim;
    TestMethod method = TestMethod::distance_covariance;
    double statistic = 0;
    double p_value = 1;
    double alpha = 0.05;
    Decision decision = Decision::fail_to_reject;
    std::uint64_t seed = 0;
    std::size_t permutations = 0;  // 0 when an analytic null was used
    std::size_t sample_size = 0;
    bool degenerate = false;

    bool rejected() const noexcept { return decision == Decision::reject_independence; }
};

struct Bandwidth {
    double value = 1;
    bool degenerate = false;
};

/// Median pairwise Euclidean distance between rows (i < j).
inline Bandwidth median_bandwidth(const Eigen::MatrixXd& rows) {
    const auto n = rows.rows();
    if (n == 0 || rows.cols() == 0) throw InvalidArgument("median_bandwidth needs a non-empty matrix");
    if (n < 2) throw InvalidArgument("median_bandwidth needs at least two rows");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((rows.row(i) - rows.row(j)).norm());

    const auto m = d.size();
    auto mid = d.begin() + static_cast<long>(m / 2);
    std::nth_element(d.begin(), mid, d.end());
    double median = *mid;
    if (m % 2 == 0) median = (median + *std::max_element(d.begin(), mid)) / 2;
    if (median > 0) return {median, false};

    double smallest = 0;
    for (double v : d)
        if (v > 0 && (smallest == 0 || v < smallest)) smallest = v;
    if (smallest > 0) return {smallest, false};
    return {1.0, true};
}

namespace detail {

inline bool is_constant(const Eigen::VectorXd& v) { return v.size() == 0 || v.maxCoeff() == v.minCoeff(); }

/// Zero mean, unit sample variance; constant columns become zero.
inline Eigen::MatrixXd standardize(Eigen::MatrixXd m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        auto col = m.col(c);
        double mean = col.mean();
        col.array() -= mean;
        double sd = m.rows() > 1 ? std::sqrt(col.squaredNorm() / static_cast<double>(m.rows() - 1)) : 0;
        if (sd > 0)
            col /= sd;
        else
            col.setZero();
    }
    return m;
}

/// Distance covariance for scalar samples in O(n log n) per evaluation.
/// With a_ij = |x_i - x_j| and b_ij = |y_i - y_j|,
///   n V_n^2 = S1/n - 2 S2/n^2 + S3/n^3,
/// S1 = sum_ij a_ij b_ij, S2 = sum_i a_i. b_i., S3 = a.. b..
/// S1 is accumulated in x-sorted order: the signed sum of
/// (x_k - x_j)(y_k - y_j) minus twice its discordant part, the latter read
/// from Fenwick trees indexed by y rank.
class ScalarDcov {
public:
    ScalarDcov(const Eigen::VectorXd& x, const Eigen::VectorXd& y) : n_(static_cast<std::size_t>(x.size())) {
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            return x(static_cast<Eigen::Index>(a)) < x(static_cast<Eigen::Index>(b));
        });
        xs_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) xs_[k] = x(static_cast<Eigen::Index>(order_[k]));
        y_.assign(y.data(), y.data() + y.size());
        arow_ = row_sums(std::vector<double>(x.data(), x.data() + x.size()));
        brow_ = row_sums(y_);

        std::vector<double> sorted = y_;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        ranks_ = sorted.size();
        yrank_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i)
            yrank_[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), y_[i]) - sorted.begin());

        double asum = std::accumulate(arow_.begin(), arow_.end(), 0.0);
        double bsum = std::accumulate(brow_.begin(), brow_.end(), 0.0);
        s3_ = asum * bsum;
    }

    /// n V_n^2 with y re-paired as y[perm[i]] against x[i].
    double statistic(const std::vector<std::size_t>& perm) const {
        const double n = static_cast<double>(n_);
        double s2 = 0;
        for (std::size_t i = 0; i < n_; ++i) s2 += arow_[i] * brow_[perm[i]];
        return s1(perm) / n - 2 * s2 / (n * n) + s3_ / (n * n * n);
    }

    double scale() const { return s3_ / std::pow(static_cast<double>(n_), 3); }

private:
    static std::vector<double> row_sums(const std::vector<double>& v) {
        const auto n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        double total = 0;
        for (double e : v) total += e;
        std::vector<double> out(n);
        double prefix = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double val = v[idx[k]];
            const double below = val * static_cast<double>(k) - prefix;
            const double above = (total - prefix - val) - val * static_cast<double>(n - 1 - k);
            out[idx[k]] = below + above;
            prefix += val;
        }
        return out;
    }

    double s1(const std::vector<std::size_t>& perm) const {
        // fenwick trees over y rank: count, sum x, sum y, sum xy
        std::vector<double> cnt(ranks_ + 1, 0), sx(ranks_ + 1, 0), sy(ranks_ + 1, 0), sxy(ranks_ + 1, 0);
        double tot_c = 0, tot_x = 0, tot_y = 0, tot_xy = 0;
        double signed_sum = 0, discordant = 0;
        for (std::size_t k = 0; k < n_; ++k) {
            const auto src = perm[order_[k]];
            const double xv = xs_[k];
            const double yv = y_[src];
            const auto r = yrank_[src];

            signed_sum += xv * yv * tot_c - xv * tot_y - yv * tot_x + tot_xy;

            // earlier points with rank <= r
            double c = 0, px = 0, py = 0, pxy = 0;
            for (auto i = r + 1; i > 0; i -= i & (~i + 1)) {
                c += cnt[i];
                px += sx[i];
                py += sy[i];
                pxy += sxy[i];
            }
            const double gc = tot_c - c, gx = tot_x - px, gy = tot_y - py, gxy = tot_xy - pxy;
            discordant += xv * yv * gc - xv * gy - yv * gx + gxy;

            for (auto i = r + 1; i <= ranks_; i += i & (~i + 1)) {
                cnt[i] += 1;
                sx[i] += xv;
                sy[i] += yv;
                sxy[i] += xv * yv;
            }
            tot_c += 1;
            tot_x += xv;
            tot_y += yv;
            tot_xy += xv * yv;
        }
        return 2 * (signed_sum - 2 * discordant);
    }

    std::size_t n_;
    std::vector<std::size_t> order_;
    std::vector<double> xs_;
    std::vector<double> y_;
    std::vector<double> arow_, brow_;
    std::vector<std::size_t> yrank_;
    std::size_t ranks_ = 0;
    double s3_ = 0;
};

/// Pivoted incomplete Cholesky of the Gaussian Gram matrix of `pts`:
/// returns G with K ~= G G^T, stopping when the largest residual diagonal
/// entry falls below tol.
inline Eigen::MatrixXd gaussian_ichol(const Eigen::MatrixXd& pts, double sigma, double tol = 1e-8) {
    const auto n = pts.rows();
    const double gamma = 1.0 / (2.0 * sigma * sigma);
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd g(n, std::min<Eigen::Index>(n, 32));
    Eigen::Index m = 0;
    while (m < n) {
        Eigen::Index p = 0;
        if (d.maxCoeff(&p) <= tol) break;
        if (m == g.cols()) g.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(n, 2 * g.cols()));
        Eigen::VectorXd col = (-gamma * (pts.rowwise() - pts.row(p)).rowwise().squaredNorm().array()).exp().matrix();
        if (m > 0) col.noalias() -= g.leftCols(m) * g.row(p).head(m).transpose();
        col /= std::sqrt(d(p));
        g.col(m) = col;
        d -= col.cwiseAbs2();
        d(p) = 0;
        ++m;
    }
    g.conservativeResize(Eigen::NoChange, m);
    return g;
}

inline Eigen::MatrixXd centered(Eigen::MatrixXd g) {
    if (g.cols() > 0) g.rowwise() -= g.colwise().mean();
    return g;
}

/// sum_ab (A A^T)_ab^2 (B B^T)_ab^2 without holding both n x n matrices.
inline double hadamard_frobenius2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const auto n = a.rows();
    constexpr Eigen::Index block = 256;
    double total = 0;
    for (Eigen::Index r = 0; r < n; r += block) {
        auto rows = std::min(block, n - r);
        Eigen::MatrixXd ka = a.middleRows(r, rows) * a.transpose();
        Eigen::MatrixXd kb = b.middleRows(r, rows) * b.transpose();
        total += ka.cwiseProduct(kb).squaredNorm();
    }
    return total;
}

inline double permutation_p_value(std::size_t at_least, std::size_t permutations) {
    return static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1);
}

inline TestResult degenerate_result(TestMethod method, std::size_t n, const TestConfig& config) {
    TestResult r;
    r.method = method;
    r.statistic = 0;
    r.p_value = 1;
    r.alpha = config.alpha;
    r.decision = Decision::fail_to_reject;
    r.seed = config.rng_seed;
    r.sample_size = n;
    r.degenerate = true;
    return r;
}

} // namespace detail

/// Distance covariance test. The statistic is n * V_n^2 (V_n^2 the squared
/// sample distance covariance); the p-value comes from permuting y.
inline TestResult dcov_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const TestConfig& config) {
    config.validate();
    if (x.size() != y.size()) throw InvalidArgument("dcov_test: x and y differ in length");
    const auto n = x.size();
    if (static_cast<std::size_t>(n) < min_dataset_rows)
        throw DataError("dcov_test needs at least " + std::to_string(min_dataset_rows) + " rows");
    const auto un = static_cast<std::size_t>(n);
    if (detail::is_constant(x) || detail::is_constant(y))
        return detail::degenerate_result(TestMethod::distance_covariance, un, config);

    const detail::ScalarDcov dcov(x, y);
    std::vector<std::size_t> perm(un);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const double observed = dcov.statistic(perm);
    // permuted values equal to the observed one up to rounding count as "at least"
    const double slack = 1e-9 * dcov.scale();

    std::mt19937_64 rng(config.rng_seed);
    std::size_t at_least = 0;
    for (std::size_t k = 0; k < config.permutations; ++k) {
        std::shuffle(perm.begin(), perm.end(), rng);
        if (dcov.statistic(perm) >= observed - slack) ++at_least;
    }

    TestResult r;
    r.method = TestMethod::distance_covariance;
    r.statistic = std::max(0.0, observed);
    r.p_value = detail::permutation_p_value(at_least, config.permutations);
    r.alpha = config.alpha;
    r.decision = r.p_value < config.alpha ? Decision::reject_independence : Decision::fail_to_reject;
    r.seed = config.rng_seed;
    r.permutations = config.permutations;
    r.sample_size = un;
    return r;
}

inline constexpr std::size_t min_kci_rows = 10;

/// Kernel conditional independence test of x _||_ y | z. Inputs are
/// standardized internally; the x kernel acts on [x, z/2].
inline TestResult kci_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& z,
                           const TestConfig& config) {
    config.validate();
    const auto n = x.size();
    if (y.size() != n || z.rows() != n) throw InvalidArgument("kci_test: x, y and z differ in row count");
    if (z.cols() < 1) throw InvalidArgument("kci_test: z needs at least one column");
    const auto un = static_cast<std::size_t>(n);
    if (un < min_kci_rows) throw DataError("kci_test needs at least " + std::to_string(min_kci_rows) + " rows");
    if (detail::is_constant(x) || detail::is_constant(y))
        return detail::degenerate_result(TestMethod::kernel_conditional, un, config);

    const Eigen::MatrixXd xs = detail::standardize(x);
    const Eigen::MatrixXd ys = detail::standardize(y);
    const Eigen::MatrixXd zs = detail::standardize(z);
    Eigen::MatrixXd xz(n, 1 + zs.cols());
    xz << xs, zs / 2;

    auto width = [&](const Eigen::MatrixXd& m) {
        return config.kernel_bandwidth ? *config.kernel_bandwidth : median_bandwidth(m).value;
    };
    const Eigen::MatrixXd gx = detail::centered(detail::gaussian_ichol(xz, width(xz)));
    const Eigen::MatrixXd gy = detail::centered(detail::gaussian_ichol(ys, width(ys)));
    const Eigen::MatrixXd gz = detail::centered(detail::gaussian_ichol(zs, width(zs)));

    // Rz = eps (Kz + eps I)^-1 = I - Gz (eps I + Gz^T Gz)^-1 Gz^T
    const double eps = config.kci_regularization;
    Eigen::MatrixXd system = gz.transpose() * gz;
    system.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success)
        throw DataError("KCI: regularized kernel system is singular (regularization " + format_number(eps) + ")");
    const Eigen::MatrixXd ax = gx - gz * llt.solve(gz.transpose() * gx);
    const Eigen::MatrixXd ay = gy - gz * llt.solve(gz.transpose() * gy);

    const double stat = (ax.transpose() * ay).squaredNorm();

    TestResult r;
    r.method = TestMethod::kernel_conditional;
    r.statistic = stat;
    r.alpha = config.alpha;
    r.seed = config.rng_seed;
    r.sample_size = un;

    if (config.kci_null == KciNull::gamma_approximation) {
        const double mean = (ax.rowwise().squaredNorm().array() * ay.rowwise().squaredNorm().array()).sum();
        const double var = 2 * detail::hadamard_frobenius2(ax, ay);
        if (!(mean > 0) || !(var > 0) || !std::isfinite(mean) || !std::isfinite(var)) {
            r.degenerate = true;
            r.p_value = 1;
        } else {
            const double shape = mean * mean / var;
            const double scale = var / mean;
            r.p_value = std::clamp(boost::math::gamma_q(shape, stat / scale), 0.0, 1.0);
        }
    } else {
        std::mt19937_64 rng(config.rng_seed);
        std::vector<Eigen::Index> perm(un);
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        Eigen::MatrixXd shuffled(ay.rows(), ay.cols());
        std::size_t at_least = 0;
        for (std::size_t k = 0; k < config.permutations; ++k) {
            std::shuffle(perm.begin(), perm.end(), rng);
            for (Eigen::Index i = 0; i < n; ++i) shuffled.row(i) = ay.row(perm[static_cast<std::size_t>(i)]);
            if ((ax.transpose() * shuffled).squaredNorm() >= stat * (1 - 1e-12)) ++at_least;
        }
        r.p_value = detail::permutation_p_value(at_least, config.permutations);
        r.permutations = config.permutations;
    }
    r.decision = r.p_value < config.alpha ? Decision::reject_independence : Decision::fail_to_reject;
    return r;
}

/// Seed used for one claim: independent of where the claim sits in a list.
inline std::uint64_t claim_seed(std::uint64_t base, const IndependenceClaim& claim) {
    return base ^ fnv1a64(to_string(claim));
}

inline TestResult test_claim(const DatasetTable& data, const IndependenceClaim& raw, const TestConfig& config) {
    config.validate();
    const auto claim = claim_canonicalize(raw);
    std::vector<std::string> wanted{claim.x, claim.y};
    wanted.insert(wanted.end(), claim.conditioning.begin(), claim.conditioning.end());
    if (auto gap = data.missing(wanted); !gap.empty()) {
        std::string names;
        for (const auto& g : gap) names += (names.empty() ? "" : ", ") + g;
        throw DataError("dataset has no column for: " + names);
    }

    TestConfig local = config;
    local.rng_seed = claim_seed(config.rng_seed, claim);
    const Eigen::VectorXd x = detail::standardize(data.column(claim.x));
    const Eigen::VectorXd y = detail::standardize(data.column(claim.y));

    TestResult r;
    if (claim.conditioning.empty()) {
        r = dcov_test(x, y, local);
    } else {
        Eigen::MatrixXd z(static_cast<Eigen::Index>(data.row_count()), static_cast<Eigen::Index>(claim.conditioning.size()));
        for (std::size_t c = 0; c < claim.conditioning.size(); ++c)
            z.col(static_cast<Eigen::Index>(c)) = data.column(claim.conditioning[c]);
        r = kci_test(x, y, detail::standardize(z), local);
    }
    r.claim = claim;
    return r;
}

struct EvaluationSummary {
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t degenerate = 0;

    bool operator==(const EvaluationSummary&) const = default;
};

struct Evaluation {
    HypothesisSet hypotheses;
    std::vector<TestResult> results;
    EvaluationSummary summary;

    bool consistent() const noexcept { return summary.failed == 0; }
};

/// Results keyed by claim; only valid for one (dataset, config) pair.
using TestCache = std::map<IndependenceClaim, TestResult>;

inline TestResult cached_test(const DatasetTable& data, const IndependenceClaim& claim, const TestConfig& config,
                              TestCache* cache) {
    if (cache) {
        auto key = claim_canonicalize(claim);
        if (auto it = cache->find(key); it != cache->end()) return it->second;
        auto r = test_claim(data, key, config);
        cache->emplace(key, r);
        return r;
    }
    return test_claim(data, claim, config);
}

inline EvaluationSummary summarize(const std::vector<TestResult>& results) {
    EvaluationSummary s;
    for (const auto& r : results) {
        if (r.degenerate)
            ++s.degenerate;
        else if (r.rejected())
            ++s.failed;
        else
            ++s.passed;
    }
    return s;
}

inline void require_coverage(const DatasetTable& data, const CausalDag& dag) {
    auto gap = data.missing(dag.observed_names());
    if (gap.empty()) return;
    std::string names;
    for (const auto& g : gap) names += (names.empty() ? "" : ", ") + g;
    throw DataError("dataset is missing observed variables: " + names);
}

inline Evaluation evaluate_dag(const DatasetTable& data, const CausalDag& dag, const TestConfig& config,
                               TestCache* cache = nullptr,
                               const std::function<void(const TestResult&)>& on_result = {}) {
    config.validate();
    require_coverage(data, dag);
    Evaluation ev;
    ev.hypotheses = implied_independencies(dag);
    for (const auto& c : ev.hypotheses.claims) {
        ev.results.push_back(cached_test(data, c, config, cache));
        if (on_result) on_result(ev.results.back());
    }
    ev.summary = summarize(ev.results);
    return ev;
}

inline ordered_json to_json(const TestConfig& c) {
    ordered_json j;
    j["alpha"] = c.alpha;
    j["permutations"] = c.permutations;
    j["rng_seed"] = c.rng_seed;
    if (c.kernel_bandwidth)
        j["kernel_bandwidth"] = *c.kernel_bandwidth;
    else
        j["kernel_bandwidth"] = "median_heuristic";
    j["kci_regularization"] = c.kci_regularization;
    j["kci_null"] = to_string(c.kci_null);
    return j;
}

/// Missing fields keep their defaults.
inline TestConfig config_from_json(const ordered_json& j, TestConfig c = {}) {
    if (j.is_null()) return c;
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("permutations")) c.permutations = j.at("permutations").get<std::size_t>();
    if (j.contains("rng_seed")) c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (j.contains("seed")) c.rng_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("kernel_bandwidth")) {
        const auto& b = j.at("kernel_bandwidth");
        if (b.is_number())
            c.kernel_bandwidth = b.get<double>();
        else if (b.is_null() || b == "median_heuristic")
            c.kernel_bandwidth.reset();
        else
            throw InvalidArgument("kernel_bandwidth must be a number or \"median_heuristic\"");
    }
    if (j.contains("kci_regularization")) c.kci_regularization = j.at("kci_regularization").get<double>();
    if (j.contains("kci_null")) {
        const auto n = j.at("kci_null").get<std::string>();
        if (n == "gamma_approximation")
            c.kci_null = KciNull::gamma_approximation;
        else if (n == "permutation")
            c.kci_null = KciNull::permutation;
        else
            throw InvalidArgument("unknown kci_null '" + n + "'");
    }
    c.validate();
    return c;
}

inline ordered_json to_json(const TestResult& r) {
    ordered_json j;
    j["claim"] = to_json(r.claim);
    j["text"] = to_string(r.claim);
    j["method"] = to_string(r.method);
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["alpha"] = r.alpha;
    j["decision"] = to_string(r.decision);
    j["seed"] = r.seed;
    j["permutations"] = r.permutations;
    j["sample_size"] = r.sample_size;
    j["degenerate"] = r.degenerate;
    return j;
}

inline TestResult result_from_json(const ordered_json& j) {
    TestResult r;
    r.claim = claim_from_json(j.at("claim"));
    r.method = j.at("method") == "distance_covariance" ? TestMethod::distance_covariance : TestMethod::kernel_conditional;
    r.statistic = j.at("statistic").get<double>();
    r.p_value = j.at("p_value").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.decision = j.at("decision") == "reject_independence" ? Decision::reject_independence : Decision::fail_to_reject;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.permutations = j.at("permutations").get<std::size_t>();
    r.sample_size = j.at("sample_size").get<std::size_t>();
    r.degenerate = j.at("degenerate").get<bool>();
    return r;
}

inline ordered_json to_json(const EvaluationSummary& s) {
    ordered_json j;
    j["passed"] = s.passed;
    j["failed"] = s.failed;
    j["degenerate"] = s.degenerate;
    return j;
}

inline ordered_json to_json(const Evaluation& ev) {
    ordered_json j;
    j["dag_fingerprint"] = ev.hypotheses.dag_fingerprint;
    j["results"] = ordered_json::array();
    for (const auto& r : ev.results) j["results"].push_back(to_json(r));
    j["summary"] = to_json(ev.summary);
    return j;
}

} // namespace cidag
