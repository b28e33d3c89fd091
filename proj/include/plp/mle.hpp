#ifndef PLP_MLE_HPP
#define PLP_MLE_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "plp/stats.hpp"

namespace plp {

enum class FitMethod { ClosedForm, Gradient, Degenerate, Em };

inline std::string to_string(FitMethod m) {
    switch (m) {
        case FitMethod::ClosedForm: return "closed_form";
        case FitMethod::Gradient: return "gradient";
        case FitMethod::Degenerate: return "degenerate";
        case FitMethod::Em: return "em";
    }
    return "";
}

struct GroupFit {
    std::string head_predicate;
    FitMethod method = FitMethod::Degenerate;
    bool identifiable = false;
    std::uint32_t iterations = 0;
};

struct FitResult {
    std::vector<double> theta;
    double loglik = 0.0;
    std::vector<GroupFit> groups;
    double wall_time = 0.0;  // seconds spent fitting

    std::uint64_t total_iterations() const {
        std::uint64_t t = 0;
        for (const auto& g : groups) t += g.iterations;
        return t;
    }
};

// Iterative methods stay inside this box; closed-form output may touch 0 or 1.
inline constexpr double kThetaMin = 1e-6;
inline constexpr double kThetaMax = 1.0 - 1e-6;

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 - e^s) for s <= 0, stable near both ends.
inline double log1mexp(double s) {
    if (s == kNegInf) return 0.0;
    if (s >= 0.0) return kNegInf;
    constexpr double kLn2 = 0.6931471805599453;
    return s > -kLn2 ? std::log(-std::expm1(s)) : std::log1p(-std::exp(s));
}

inline std::string config_string(const Configuration& cfg) {
    std::string s = "(";
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(cfg[i]);
    }
    return s + ")";
}

// Positions of the learnable clauses within a group, in schema order (which
// is also ascending param_id order).
inline std::vector<std::size_t> learnable_cols(const GroupStats& gs) {
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < gs.labels.size(); ++i)
        if (gs.labels[i].learnable_kind()) cols.push_back(i);
    return cols;
}

// Group log-likelihood with the group's learnable parameters given locally,
// parallel to learnable_cols(gs). Returns -inf on inconsistent cells.
inline double group_loglik(const GroupStats& gs,
                           const std::vector<std::size_t>& cols,
                           const std::vector<double>& local) {
    std::vector<double> logq(gs.labels.size());
    for (std::size_t i = 0; i < gs.labels.size(); ++i)
        logq[i] = std::log(gs.labels[i].fixed_q());
    for (std::size_t j = 0; j < cols.size(); ++j)
        logq[cols[j]] = std::log1p(-local[j]);

    double total = 0.0;
    for (const auto& [cfg, c] : gs.table) {
        double logprod = 0.0;
        for (std::size_t i = 0; i < cfg.size(); ++i)
            if (cfg[i]) logprod += cfg[i] * logq[i];
        if (c.n_false) total += static_cast<double>(c.n_false) * logprod;
        if (c.n_true) total += static_cast<double>(c.n_true) * log1mexp(logprod);
    }
    return total;
}

// d(group_loglik)/d(local theta); requires interior local theta.
inline std::vector<double> group_grad(const GroupStats& gs,
                                      const std::vector<std::size_t>& cols,
                                      const std::vector<double>& local) {
    std::vector<double> logq(gs.labels.size());
    for (std::size_t i = 0; i < gs.labels.size(); ++i)
        logq[i] = std::log(gs.labels[i].fixed_q());
    for (std::size_t j = 0; j < cols.size(); ++j)
        logq[cols[j]] = std::log1p(-local[j]);

    std::vector<double> grad(cols.size(), 0.0);
    for (const auto& [cfg, c] : gs.table) {
        double logprod = 0.0;
        for (std::size_t i = 0; i < cfg.size(); ++i)
            if (cfg[i]) logprod += cfg[i] * logq[i];
        double fail = -std::expm1(logprod);  // 1 - prod q^m
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::uint32_t m = cfg[cols[j]];
            if (!m) continue;
            double q = 1.0 - local[j];
            if (c.n_true) {
                if (fail <= 0.0)
                    throw InconsistencyError(
                        "head '" + gs.head_predicate +
                        "' observed true but no clause can fire "
                        "(configuration " +
                        config_string(cfg) + ")");
                grad[j] += static_cast<double>(c.n_true) * m *
                           std::exp(logprod - logq[cols[j]]) / fail;
            }
            if (c.n_false) grad[j] -= static_cast<double>(c.n_false) * m / q;
        }
    }
    return grad;
}

// Fraction-free Gaussian elimination over the integers; returns rank, and the
// determinant when the matrix is square (0 otherwise).
struct IntElim {
    std::size_t rank = 0;
    __int128 det = 0;
};

inline IntElim int_eliminate(std::vector<std::vector<long long>> m) {
    IntElim out;
    if (m.empty()) return out;
    std::size_t rows = m.size(), colcount = m[0].size();
    std::vector<__int128> a(rows * colcount);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < colcount; ++c) a[r * colcount + c] = m[r][c];
    __int128 prev = 1;
    std::size_t r = 0;
    int sign = 1;
    for (std::size_t c = 0; c < colcount && r < rows; ++c) {
        std::size_t pivot = r;
        while (pivot < rows && a[pivot * colcount + c] == 0) ++pivot;
        if (pivot == rows) continue;
        if (pivot != r) {
            for (std::size_t k = 0; k < colcount; ++k)
                std::swap(a[pivot * colcount + k], a[r * colcount + k]);
            sign = -sign;
        }
        for (std::size_t i = r + 1; i < rows; ++i) {
            for (std::size_t k = c + 1; k < colcount; ++k)
                a[i * colcount + k] = (a[r * colcount + c] * a[i * colcount + k] -
                                       a[i * colcount + c] * a[r * colcount + k]) /
                                      prev;
            a[i * colcount + c] = 0;
        }
        prev = a[r * colcount + c];
        ++r;
    }
    out.rank = r;
    if (rows == colcount && r == rows) out.det = sign * prev;
    return out;
}

// Solve Ax = b by Gaussian elimination with partial pivoting; A is known
// nonsingular (certified exactly beforehand).
inline std::vector<double> solve(std::vector<std::vector<double>> a,
                                 std::vector<double> b) {
    std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
        std::swap(a[c], a[pivot]);
        std::swap(b[c], b[pivot]);
        for (std::size_t r = c + 1; r < n; ++r) {
            double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
        x[c] = s / a[c][c];
    }
    return x;
}

inline std::vector<double> clamp_box(std::vector<double> v) {
    for (double& x : v) x = std::min(kThetaMax, std::max(kThetaMin, x));
    return v;
}

// Observed configurations that touch a learnable clause, projected onto the
// learnable columns; the rank of this matrix diagnoses identifiability.
inline std::vector<std::vector<long long>> learnable_rows(
    const GroupStats& gs, const std::vector<std::size_t>& cols) {
    std::vector<std::vector<long long>> rows;
    for (const auto& [cfg, c] : gs.table) {
        if (c.n_true + c.n_false == 0) continue;
        bool active = false;
        for (std::size_t col : cols) active |= cfg[col] > 0;
        if (!active) continue;
        std::vector<long long> r;
        for (std::size_t col : cols) r.push_back(cfg[col]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace detail

// Total log-likelihood of complete data under theta (indexed by param_id).
// -inf signals an observation no parameter choice can explain.
inline double log_likelihood(const SufficientStats& stats,
                             const std::vector<double>& theta) {
    std::uint32_t needed = 0;
    for (const auto& gs : stats.groups)
        for (const auto& l : gs.labels)
            if (l.learnable_kind()) needed = std::max(needed, l.param_id + 1);
    if (theta.size() < needed)
        throw ModelError("parameter vector has " + std::to_string(theta.size()) +
                         " entries, need " + std::to_string(needed));
    double total = 0.0;
    for (const auto& gs : stats.groups) {
        auto cols = detail::learnable_cols(gs);
        std::vector<double> local(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j)
            local[j] = theta[gs.labels[cols[j]].param_id];
        total += detail::group_loglik(gs, cols, local);
    }
    return total;
}

// Observation that is impossible under every parameter choice: a head seen
// true with nothing able to fire, or seen false while a deterministic (or
// probability-1) clause body holds.
inline std::optional<std::string> find_inconsistency(
    const SufficientStats& stats) {
    for (const auto& gs : stats.groups) {
        for (const auto& [cfg, c] : gs.table) {
            bool can_fire = false, must_fire = false;
            for (std::size_t i = 0; i < cfg.size(); ++i) {
                if (!cfg[i]) continue;
                const Label& l = gs.labels[i];
                if (l.fixed_q() < 1.0) can_fire = true;  // p > 0 or learnable
                if (!l.learnable_kind() && l.fixed_q() <= 0.0) must_fire = true;
            }
            if (c.n_true && !can_fire)
                return "head '" + gs.head_predicate +
                       "' observed true but no clause can fire (configuration " +
                       detail::config_string(cfg) + ")";
            if (c.n_false && must_fire)
                return "head '" + gs.head_predicate +
                       "' observed false but a deterministic clause fires "
                       "(configuration " +
                       detail::config_string(cfg) + ")";
        }
    }
    return std::nullopt;
}

// Analytic gradient of log_likelihood w.r.t. each learnable parameter;
// requires every learnable theta strictly inside (0,1).
inline std::vector<double> gradient(const SufficientStats& stats,
                                    const std::vector<double>& theta) {
    std::uint32_t needed = 0;
    for (const auto& gs : stats.groups)
        for (const auto& l : gs.labels)
            if (l.learnable_kind()) needed = std::max(needed, l.param_id + 1);
    if (theta.size() < needed)
        throw ModelError("parameter vector has " + std::to_string(theta.size()) +
                         " entries, need " + std::to_string(needed));
    for (double t : theta)
        if (!(t > 0.0 && t < 1.0))
            throw ModelError("gradient requires interior theta, got " +
                             format_probability(t));
    std::vector<double> grad(theta.size(), 0.0);
    for (const auto& gs : stats.groups) {
        auto cols = detail::learnable_cols(gs);
        if (cols.empty()) continue;
        std::vector<double> local(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j)
            local[j] = theta[gs.labels[cols[j]].param_id];
        auto g = detail::group_grad(gs, cols, local);
        for (std::size_t j = 0; j < cols.size(); ++j)
            grad[gs.labels[cols[j]].param_id] += g[j];
    }
    return grad;
}

// Exact per-configuration MLE transported through the log-linear system
// M log q = log g, where M is the multiplicity matrix of the observed
// configurations restricted to learnable clauses. Succeeds only when M is
// square and invertible over the rationals, every empirical failure rate is
// interior, and the resulting theta lands in [0,1]; otherwise the caller
// falls back to gradient ascent.
inline std::optional<std::vector<double>> closed_form(const GroupStats& gs) {
    auto cols = detail::learnable_cols(gs);
    if (cols.empty()) return std::nullopt;

    std::vector<std::vector<long long>> m_int;
    std::vector<std::vector<double>> m_dbl;
    std::vector<double> log_g;
    for (const auto& [cfg, c] : gs.table) {
        if (c.n_true + c.n_false == 0) continue;
        bool learnable_active = false;
        for (std::size_t col : cols) learnable_active |= cfg[col] > 0;
        if (!learnable_active) continue;

        double f = static_cast<double>(c.n_false) /
                   static_cast<double>(c.n_true + c.n_false);
        if (f <= 0.0 || f >= 1.0) return std::nullopt;
        double log_fixed = 0.0;
        for (std::size_t i = 0; i < cfg.size(); ++i) {
            if (!cfg[i] || gs.labels[i].learnable_kind()) continue;
            double q = gs.labels[i].fixed_q();
            if (q <= 0.0) return std::nullopt;
            log_fixed += cfg[i] * std::log(q);
        }
        double lg = std::log(f) - log_fixed;
        if (lg > 0.0) return std::nullopt;  // g > 1
        std::vector<long long> ri;
        std::vector<double> rd;
        for (std::size_t col : cols) {
            ri.push_back(cfg[col]);
            rd.push_back(cfg[col]);
        }
        m_int.push_back(std::move(ri));
        m_dbl.push_back(std::move(rd));
        log_g.push_back(lg);
    }
    if (m_int.size() != cols.size()) return std::nullopt;
    if (detail::int_eliminate(m_int).det == 0) return std::nullopt;

    auto log_q = detail::solve(std::move(m_dbl), std::move(log_g));
    std::vector<double> theta(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        double t = -std::expm1(log_q[j]);
        if (t < -1e-12 || t > 1.0 + 1e-12) return std::nullopt;
        theta[j] = std::min(1.0, std::max(0.0, t));
    }
    return theta;
}

// Projected gradient ascent over the group's learnable parameters with
// Armijo backtracking; box [1e-6, 1-1e-6].
inline std::pair<std::vector<double>, std::uint32_t> gradient_fit(
    const GroupStats& gs, std::vector<double> init) {
    constexpr double kArmijo = 1e-4;
    constexpr double kHalving = 0.5;
    constexpr double kGradTol = 1e-8;
    constexpr std::uint32_t kMaxIters = 500;

    auto cols = detail::learnable_cols(gs);
    if (init.size() != cols.size())
        throw ModelError("gradient_fit init has " + std::to_string(init.size()) +
                         " entries, group has " + std::to_string(cols.size()) +
                         " learnable clauses");
    for (const auto& [cfg, c] : gs.table) {
        if (!c.n_true) continue;
        bool can_fire = false;
        for (std::size_t i = 0; i < cfg.size(); ++i)
            if (cfg[i] && gs.labels[i].fixed_q() < 1.0) can_fire = true;
        if (!can_fire)
            throw InconsistencyError(
                "head '" + gs.head_predicate +
                "' observed true but no clause can fire (configuration " +
                detail::config_string(cfg) + ")");
    }

    std::vector<double> theta = detail::clamp_box(std::move(init));
    double cur = detail::group_loglik(gs, cols, theta);
    for (std::uint32_t it = 0; it < kMaxIters; ++it) {
        auto grad = detail::group_grad(gs, cols, theta);
        double pg = 0.0;
        for (std::size_t j = 0; j < grad.size(); ++j) {
            double g = grad[j];
            if (theta[j] <= kThetaMin && g < 0.0) g = 0.0;
            if (theta[j] >= kThetaMax && g > 0.0) g = 0.0;
            pg = std::max(pg, std::abs(g));
        }
        if (pg < kGradTol) return {theta, it};

        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= 1e-14) {
            std::vector<double> cand(theta.size());
            double descent = 0.0;
            bool moved = false;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                cand[j] = std::min(kThetaMax,
                                   std::max(kThetaMin, theta[j] + alpha * grad[j]));
                descent += grad[j] * (cand[j] - theta[j]);
                moved |= cand[j] != theta[j];
            }
            if (moved) {
                double next = detail::group_loglik(gs, cols, cand);
                if (std::isfinite(next) && next >= cur + kArmijo * descent) {
                    theta = std::move(cand);
                    cur = next;
                    accepted = true;
                    break;
                }
            }
            alpha *= kHalving;
        }
        if (!accepted) return {theta, it};  // float-resolution stall
    }
    return {theta, kMaxIters};
}

// Direct maximization: closed form per head group when available, projected
// gradient otherwise; unobserved groups keep their declared inits.
inline FitResult fit_direct(const SufficientStats& stats,
                            const Program& program) {
    if (auto bad = find_inconsistency(stats)) throw InconsistencyError(*bad);

    auto start = std::chrono::steady_clock::now();
    FitResult res;
    res.theta = program.params;
    for (const auto& gs : stats.groups) {
        GroupFit gf;
        gf.head_predicate = gs.head_predicate;
        auto cols = detail::learnable_cols(gs);
        if (cols.empty()) {
            gf.method = FitMethod::Degenerate;
            gf.identifiable = true;  // nothing to identify
            res.groups.push_back(std::move(gf));
            continue;
        }
        auto rows = detail::learnable_rows(gs, cols);
        if (rows.empty()) {
            gf.method = FitMethod::Degenerate;
            gf.identifiable = false;
            res.groups.push_back(std::move(gf));
            continue;
        }
        if (auto cf = closed_form(gs)) {
            for (std::size_t j = 0; j < cols.size(); ++j)
                res.theta[gs.labels[cols[j]].param_id] = (*cf)[j];
            gf.method = FitMethod::ClosedForm;
            gf.identifiable = true;
        } else {
            std::vector<double> init(cols.size());
            for (std::size_t j = 0; j < cols.size(); ++j)
                init[j] = program.params[gs.labels[cols[j]].param_id];
            auto [theta, iters] = gradient_fit(gs, std::move(init));
            for (std::size_t j = 0; j < cols.size(); ++j)
                res.theta[gs.labels[cols[j]].param_id] = theta[j];
            gf.method = FitMethod::Gradient;
            gf.iterations = iters;
            gf.identifiable = detail::int_eliminate(rows).rank == cols.size();
        }
        res.groups.push_back(std::move(gf));
    }
    res.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    res.loglik = log_likelihood(stats, res.theta);
    return res;
}

}  // namespace plp

#endif
