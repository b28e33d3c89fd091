#ifndef PLP_STATS_HPP
#define PLP_STATS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "plp/ground.hpp"
#include "plp/interpretations.hpp"

namespace plp {

// Per ground head and record, how many ground bodies of each schema clause
// were satisfied. Generalizes the (h, b) cell indexing of a 2x2 count table.
using Configuration = std::vector<std::uint32_t>;

struct Counts {
    std::uint64_t n_true = 0;
    std::uint64_t n_false = 0;
};

struct GroupStats {
    std::string head_predicate;
    std::vector<std::uint32_t> schema_clauses;  // program clause ids, in order
    std::vector<Label> labels;                  // parallel to schema_clauses
    std::uint64_t n_ground_heads = 0;
    std::map<Configuration, Counts> table;      // rows in lexicographic order

    std::uint64_t total_count() const {
        std::uint64_t t = 0;
        for (const auto& [cfg, c] : table) t += c.n_true + c.n_false;
        return t;
    }
};

struct SufficientStats {
    std::vector<GroupStats> groups;
};

inline bool body_satisfied(const GroundClause& gc,
                           const std::vector<std::uint8_t>& record) {
    for (const auto& lit : gc.body)
        if (static_cast<bool>(record[lit.atom]) == lit.negated) return false;
    return true;
}

inline SufficientStats sufficient_stats(const InterpretationSet& data,
                                        const std::vector<HeadGroup>& groups,
                                        const GroundProgram& gp) {
    SufficientStats out;
    out.groups.reserve(groups.size());
    for (const auto& g : groups) {
        GroupStats gs;
        gs.head_predicate = g.head_predicate;
        gs.schema_clauses = g.schema_clauses;
        for (auto ci : g.schema_clauses)
            gs.labels.push_back(gp.program.clauses[ci].label);
        gs.n_ground_heads = g.ground_heads.size();
        out.groups.push_back(std::move(gs));
    }

    Configuration cfg;
    for (std::size_t r = 0; r < data.records.size(); ++r) {
        const auto& rec = data.records[r];
        std::uint64_t w = data.weights[r];
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const HeadGroup& g = groups[gi];
            auto& table = out.groups[gi].table;
            for (const auto& gh : g.ground_heads) {
                cfg.assign(g.schema_clauses.size(), 0);
                for (std::size_t s = 0; s < gh.instances.size(); ++s)
                    for (std::uint32_t gci : gh.instances[s])
                        if (body_satisfied(gp.ground_clauses[gci], rec))
                            ++cfg[s];
                Counts& c = table[cfg];
                if (rec[gh.atom])
                    c.n_true += w;
                else
                    c.n_false += w;
            }
        }
    }
    return out;
}

}  // namespace plp

#endif
