#ifndef PLP_SAMPLE_HPP
#define PLP_SAMPLE_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "plp/ground.hpp"
#include "plp/interpretations.hpp"
#include "plp/stats.hpp"

namespace plp {

// Generator identity recorded in sample-file headers so datasets are
// reproducible across builds.
inline constexpr const char* kGeneratorId = "mt19937_64";

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Ancestral sampling in topological order. Draw order is fixed: records
// outermost, then atoms in topological order, then that head's ground clauses
// in ground-program order; a coin is spent only on probabilistic clauses
// whose body is satisfied.
inline InterpretationSet forward_sample(const GroundProgram& gp,
                                        const std::vector<double>& params,
                                        std::uint64_t n, std::uint64_t seed) {
    if (params.size() != gp.program.n_params())
        throw ModelError("parameter vector has " +
                         std::to_string(params.size()) + " entries, program has " +
                         std::to_string(gp.program.n_params()));
    std::mt19937_64 rng(seed);
    InterpretationSet out;
    out.n_atoms = gp.n_atoms();
    std::vector<std::uint8_t> rec(gp.n_atoms());
    for (std::uint64_t r = 0; r < n; ++r) {
        std::fill(rec.begin(), rec.end(), 0);
        for (std::uint32_t atom : gp.topo_order) {
            bool value = false;
            for (std::uint32_t gci : gp.clauses_of_head[atom]) {
                const GroundClause& gc = gp.ground_clauses[gci];
                if (!body_satisfied(gc, rec)) continue;
                bool fires;
                switch (gc.label.kind) {
                    case Label::Kind::Deterministic:
                        fires = true;
                        break;
                    case Label::Kind::Fixed:
                        fires = uniform01(rng) < gc.label.p;
                        break;
                    default:
                        fires = uniform01(rng) < params[gc.label.param_id];
                }
                value = value || fires;
            }
            rec[atom] = value;
        }
        out.add_record(rec);
    }
    return out;
}

inline std::string sample_header(std::uint64_t seed) {
    return "# seed=" + std::to_string(seed) + " generator=" + kGeneratorId +
           "\n";
}

}  // namespace plp

#endif
