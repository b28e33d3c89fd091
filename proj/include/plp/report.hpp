#ifndef PLP_REPORT_HPP
#define PLP_REPORT_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "plp/em.hpp"
#include "plp/mle.hpp"
#include "plp/program.hpp"

namespace plp {

inline std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// key=value summary block; `method` names the fitter that produced it.
inline std::string fit_summary(const FitResult& res, const std::string& method) {
    std::string s;
    s += "method=" + method + "\n";
    s += "loglik=" + format_probability(res.loglik) + "\n";
    s += "wall_time_s=" + format_fixed6(res.wall_time) + "\n";
    s += "iterations=" + std::to_string(res.total_iterations()) + "\n";
    s += "n_params=" + std::to_string(res.theta.size()) + "\n";
    for (std::size_t i = 0; i < res.theta.size(); ++i)
        s += "theta." + std::to_string(i) + "=" +
             format_probability(res.theta[i]) + "\n";
    for (const auto& g : res.groups) {
        std::string key = "group." + g.head_predicate + ".";
        s += key + "method=" + to_string(g.method) + "\n";
        s += key + "identifiable=" + (g.identifiable ? "true" : "false") + "\n";
        s += key + "iterations=" + std::to_string(g.iterations) + "\n";
    }
    return s;
}

inline std::string em_trace_csv(const EMTrace& trace) {
    std::size_t n_params =
        trace.iters.empty() ? 0 : trace.iters.front().theta.size();
    std::string s = "iteration,loglik,delta";
    for (std::size_t p = 0; p < n_params; ++p)
        s += ",theta" + std::to_string(p);
    s += "\n";
    for (std::size_t i = 0; i < trace.iters.size(); ++i) {
        const auto& it = trace.iters[i];
        s += std::to_string(i);
        s += "," + format_probability(it.loglik);
        s += "," + format_probability(it.delta);
        for (double t : it.theta) s += "," + format_probability(t);
        s += "\n";
    }
    return s;
}

// The input program with every learnable label replaced by its estimate,
// rounded to six decimals. Re-parses under the same grammar.
inline std::string write_fitted_program(const Program& program,
                                        const std::vector<double>& theta) {
    if (theta.size() != program.n_params())
        throw ModelError("parameter vector has " + std::to_string(theta.size()) +
                         " entries, program has " +
                         std::to_string(program.n_params()));
    std::string s;
    for (const auto& c : program.clauses) {
        if (c.label.learnable_kind()) {
            Clause fitted = c;
            fitted.label = Label::deterministic();
            s += format_fixed6(theta[c.label.param_id]) + "::" +
                 to_string(fitted);
        } else {
            s += to_string(c);
        }
        s += '\n';
    }
    return s;
}

}  // namespace plp

#endif
