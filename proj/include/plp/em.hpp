#ifndef PLP_EM_HPP
#define PLP_EM_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "plp/ground.hpp"
#include "plp/interpretations.hpp"
#include "plp/mle.hpp"
#include "plp/stats.hpp"

namespace plp {

// One fresh latent fact per probabilistic ground rule instance.
struct Auxiliary {
    Atom atom;
    Label label;                  // the rule's original label
    std::uint32_t head_atom;      // owning ground head, source indices
    std::uint32_t source_clause;  // owning schema clause
    std::uint32_t ground_clause;  // the rule instance it replaces
};

struct DesugaredProgram {
    GroundProgram source;  // the program the data refer to
    GroundProgram base;    // rules made deterministic with aux atoms appended
    std::vector<Auxiliary> auxes;
};

namespace detail {

inline std::string fresh_aux_prefix(const GroundProgram& gp) {
    std::string prefix = "aux";
    auto taken = [&](const std::string& pre) {
        for (const auto& a : gp.atoms) {
            if (a.predicate.size() <= pre.size() ||
                a.predicate.compare(0, pre.size(), pre) != 0)
                continue;
            bool digits = true;
            for (std::size_t i = pre.size(); i < a.predicate.size(); ++i)
                digits &= std::isdigit(
                              static_cast<unsigned char>(a.predicate[i])) != 0;
            if (digits) return true;
        }
        return false;
    };
    while (taken(prefix)) prefix = "z" + prefix;
    return prefix;
}

}  // namespace detail

// Rewrites every probabilistic ground rule as a parentless auxiliary fact
// plus a deterministic rule with the auxiliary appended to its body.
// Probabilistic facts stay as they are.
inline DesugaredProgram desugar(const GroundProgram& gp) {
    DesugaredProgram dp;
    dp.source = gp;

    std::string prefix = detail::fresh_aux_prefix(gp);
    Program rewritten;
    rewritten.params = gp.program.params;
    for (std::uint32_t gci = 0; gci < gp.ground_clauses.size(); ++gci) {
        const GroundClause& gc = gp.ground_clauses[gci];
        Clause c;
        c.head = gp.atoms[gc.head];
        for (const auto& lit : gc.body)
            c.body.push_back({gp.atoms[lit.atom], lit.negated});
        if (gc.body.empty() || gc.label.kind == Label::Kind::Deterministic) {
            c.label = gc.label;
            rewritten.clauses.push_back(std::move(c));
            continue;
        }
        Atom aux{prefix + std::to_string(dp.auxes.size()), {}};
        rewritten.clauses.push_back({aux, {}, gc.label});
        c.label = Label::deterministic();
        c.body.push_back({aux, false});
        rewritten.clauses.push_back(std::move(c));
        dp.auxes.push_back({aux, gc.label, gc.head, gc.source, gci});
    }
    dp.base = ground(rewritten);
    return dp;
}

enum class MStepMode { AllGroundings, SatisfiedOnly };

struct ExpectedCounts {
    std::vector<double> successes;  // per param_id
    std::vector<double> instances;
};

// Exact E-step. With complete data the latent layer factorizes per ground
// head: conditioned on head true, each active coin j (deterministic counts
// as probability 1, fixed as p, learnable as theta) has posterior
// theta_j / (1 - prod_{j in S}(1-theta_j)); head false forces every active
// coin off. Coins whose rule body is unsatisfied are decoupled from the data
// and keep their prior (included in the M-step denominator under
// AllGroundings, dropped under SatisfiedOnly).
inline ExpectedCounts e_step(const DesugaredProgram& dp,
                             const InterpretationSet& data,
                             const std::vector<double>& theta,
                             MStepMode mode = MStepMode::AllGroundings) {
    const GroundProgram& gp = dp.source;
    if (theta.size() != gp.program.n_params())
        throw ModelError("parameter vector has " +
                         std::to_string(theta.size()) + " entries, program has " +
                         std::to_string(gp.program.n_params()));
    ExpectedCounts out;
    out.successes.assign(theta.size(), 0.0);
    out.instances.assign(theta.size(), 0.0);

    auto coin_theta = [&](const Label& l) {
        switch (l.kind) {
            case Label::Kind::Deterministic: return 1.0;
            case Label::Kind::Fixed: return l.p;
            default: return theta[l.param_id];
        }
    };

    std::vector<std::uint32_t> active;
    for (std::size_t r = 0; r < data.records.size(); ++r) {
        const auto& rec = data.records[r];
        double w = static_cast<double>(data.weights[r]);
        for (std::uint32_t head = 0; head < gp.n_atoms(); ++head) {
            if (gp.clauses_of_head[head].empty()) continue;
            active.clear();
            double fail = 1.0;
            for (std::uint32_t gci : gp.clauses_of_head[head]) {
                const GroundClause& gc = gp.ground_clauses[gci];
                if (body_satisfied(gc, rec)) {
                    active.push_back(gci);
                    fail *= 1.0 - coin_theta(gc.label);
                } else if (mode == MStepMode::AllGroundings &&
                           gc.label.learnable_kind()) {
                    // unconstrained coin: posterior equals prior
                    std::uint32_t pid = gc.label.param_id;
                    out.successes[pid] += w * theta[pid];
                    out.instances[pid] += w;
                }
            }
            bool head_true = rec[head];
            if (head_true && fail >= 1.0)
                throw InconsistencyError(
                    "head '" + to_string(gp.atoms[head]) +
                    "' observed true but no clause can fire");
            double denom = 1.0 - fail;
            for (std::uint32_t gci : active) {
                const Label& l = gp.ground_clauses[gci].label;
                if (!l.learnable_kind()) continue;
                std::uint32_t pid = l.param_id;
                out.successes[pid] += head_true ? w * theta[pid] / denom : 0.0;
                out.instances[pid] += w;
            }
        }
    }
    return out;
}

struct EmOptions {
    double tol = 1e-6;
    std::uint32_t max_iters = 1000;
    MStepMode mstep = MStepMode::AllGroundings;
};

struct EMIteration {
    double loglik;
    double delta;
    std::vector<double> theta;
};

struct EMTrace {
    std::vector<EMIteration> iters;  // entry 0 is the initial point
    FitResult final;
};

// Baseline EM on the desugared program: exact E-step, ratio M-step, stop on
// |delta log-likelihood| < tol. The log-likelihood is the observed-data one,
// evaluated through the same function the direct fitter maximizes.
inline EMTrace fit_em(const GroundProgram& gp, const InterpretationSet& data,
                      std::vector<double> init, const EmOptions& opts = {}) {
    if (init.size() != gp.program.n_params())
        throw ModelError("parameter vector has " + std::to_string(init.size()) +
                         " entries, program has " +
                         std::to_string(gp.program.n_params()));
    auto groups = head_groups(gp);
    SufficientStats stats = sufficient_stats(data, groups, gp);
    if (auto bad = find_inconsistency(stats)) throw InconsistencyError(*bad);

    auto start = std::chrono::steady_clock::now();
    DesugaredProgram dp = desugar(gp);
    std::vector<double> theta = detail::clamp_box(std::move(init));

    EMTrace trace;
    double cur = log_likelihood(stats, theta);
    trace.iters.push_back({cur, 0.0, theta});
    std::uint32_t iters = 0;
    while (iters < opts.max_iters) {
        ExpectedCounts ec = e_step(dp, data, theta, opts.mstep);
        for (std::size_t p = 0; p < theta.size(); ++p)
            if (ec.instances[p] > 0.0)
                theta[p] = std::min(
                    kThetaMax,
                    std::max(kThetaMin, ec.successes[p] / ec.instances[p]));
        ++iters;
        double next = log_likelihood(stats, theta);
        trace.iters.push_back({next, next - cur, theta});
        bool converged = std::abs(next - cur) < opts.tol;
        cur = next;
        if (converged) break;
    }

    FitResult& res = trace.final;
    res.theta = theta;
    res.loglik = cur;
    res.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    for (const auto& gs : stats.groups) {
        GroupFit gf;
        gf.head_predicate = gs.head_predicate;
        auto cols = detail::learnable_cols(gs);
        if (cols.empty()) {
            gf.method = FitMethod::Degenerate;
            gf.identifiable = true;
        } else {
            auto rows = detail::learnable_rows(gs, cols);
            if (rows.empty()) {
                gf.method = FitMethod::Degenerate;
                gf.identifiable = false;
            } else {
                gf.method = FitMethod::Em;
                gf.iterations = iters;
                gf.identifiable =
                    detail::int_eliminate(rows).rank == cols.size();
            }
        }
        res.groups.push_back(std::move(gf));
    }
    return trace;
}

}  // namespace plp

#endif
