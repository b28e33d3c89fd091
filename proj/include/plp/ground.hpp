#ifndef PLP_GROUND_HPP
#define PLP_GROUND_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "plp/program.hpp"

namespace plp {

struct GroundClause {
    struct BodyLit {
        std::uint32_t atom;
        bool negated;
        auto operator<=>(const BodyLit&) const = default;
    };
    std::uint32_t head;
    std::vector<BodyLit> body;
    Label label;
    std::uint32_t source;  // index into Program::clauses
};

struct GroundProgram {
    Program program;
    std::vector<Atom> atoms;  // sorted by (predicate, args); index = atom id
    std::vector<GroundClause> ground_clauses;
    std::vector<std::vector<std::uint32_t>> clauses_of_head;  // atom id -> clause ids
    std::vector<std::vector<std::uint32_t>> dep_children;     // subgoal -> heads
    std::vector<std::uint32_t> topo_order;                    // atom ids

    std::optional<std::uint32_t> atom_index(const Atom& a) const {
        auto it = std::lower_bound(atoms.begin(), atoms.end(), a);
        if (it == atoms.end() || !(*it == a)) return std::nullopt;
        return static_cast<std::uint32_t>(it - atoms.begin());
    }
    std::size_t n_atoms() const { return atoms.size(); }
};

namespace detail {

inline Atom substitute(const Atom& a,
                       const std::map<std::string, std::string>& sub) {
    Atom out;
    out.predicate = a.predicate;
    out.args.reserve(a.args.size());
    for (const auto& t : a.args) {
        auto it = sub.find(t);
        out.args.push_back(it == sub.end() ? t : it->second);
    }
    return out;
}

inline std::vector<std::string> clause_variables(const Clause& c) {
    std::vector<std::string> vars;
    auto add = [&](const Atom& a) {
        for (const auto& t : a.args)
            if (is_variable(t) &&
                std::find(vars.begin(), vars.end(), t) == vars.end())
                vars.push_back(t);
    };
    add(c.head);
    for (const auto& lit : c.body) add(lit.atom);
    return vars;
}

// Deterministic cycle extraction from the residual graph left by Kahn's
// algorithm: follow smallest successors until a node repeats.
inline std::string describe_cycle(const GroundProgram& gp,
                                  const std::vector<bool>& residual) {
    std::uint32_t start = 0;
    while (start < residual.size() && !residual[start]) ++start;
    std::vector<std::uint32_t> path;
    std::vector<int> seen(residual.size(), -1);
    std::uint32_t cur = start;
    while (seen[cur] < 0) {
        seen[cur] = static_cast<int>(path.size());
        path.push_back(cur);
        std::uint32_t next = cur;
        bool found = false;
        for (std::uint32_t child : gp.dep_children[cur]) {
            if (residual[child] && (!found || child < next)) {
                next = child;
                found = true;
            }
        }
        cur = next;
    }
    std::string s;
    for (std::size_t i = seen[cur]; i < path.size(); ++i)
        s += to_string(gp.atoms[path[i]]) + " -> ";
    return s + to_string(gp.atoms[cur]);
}

}  // namespace detail

// Grounds every clause over the full constant domain, indexes the resulting
// atoms lexicographically, builds the dependency graph, and verifies
// acyclicity. `extra_constants` widens the domain beyond the constants
// harvested from the program text.
inline GroundProgram ground(const Program& program,
                            const std::set<std::string>& extra_constants = {}) {
    std::set<std::string> domain = program.constants;
    domain.insert(extra_constants.begin(), extra_constants.end());
    std::vector<std::string> consts(domain.begin(), domain.end());

    struct RawClause {
        Atom head;
        std::vector<Literal> body;
        std::uint32_t source;
    };
    std::vector<RawClause> raw;
    std::set<std::tuple<Atom, std::vector<Literal>, std::uint32_t>> dedup;

    for (std::uint32_t ci = 0; ci < program.clauses.size(); ++ci) {
        const Clause& c = program.clauses[ci];
        auto vars = detail::clause_variables(c);
        if (vars.empty()) {
            if (dedup.emplace(c.head, c.body, ci).second)
                raw.push_back({c.head, c.body, ci});
            continue;
        }
        if (consts.empty())
            throw ModelError("cannot ground clause '" + to_string(c) +
                             "': empty constant domain");
        // odometer over substitutions, last variable fastest
        std::vector<std::size_t> idx(vars.size(), 0);
        while (true) {
            std::map<std::string, std::string> sub;
            for (std::size_t v = 0; v < vars.size(); ++v)
                sub[vars[v]] = consts[idx[v]];
            Atom head = detail::substitute(c.head, sub);
            std::vector<Literal> body;
            body.reserve(c.body.size());
            for (const auto& lit : c.body)
                body.push_back({detail::substitute(lit.atom, sub), lit.negated});
            if (dedup.emplace(head, body, ci).second)
                raw.push_back({std::move(head), std::move(body), ci});
            std::size_t v = vars.size();
            while (v > 0 && ++idx[v - 1] == consts.size()) idx[--v] = 0;
            if (v == 0) break;
        }
    }

    GroundProgram gp;
    gp.program = program;
    std::set<Atom> atom_set;
    for (const auto& rc : raw) {
        atom_set.insert(rc.head);
        for (const auto& lit : rc.body) atom_set.insert(lit.atom);
    }
    gp.atoms.assign(atom_set.begin(), atom_set.end());

    auto index_of = [&](const Atom& a) {
        return static_cast<std::uint32_t>(
            std::lower_bound(gp.atoms.begin(), gp.atoms.end(), a) -
            gp.atoms.begin());
    };

    gp.clauses_of_head.resize(gp.atoms.size());
    gp.dep_children.resize(gp.atoms.size());
    std::vector<std::set<std::uint32_t>> children(gp.atoms.size());
    for (const auto& rc : raw) {
        GroundClause gc;
        gc.head = index_of(rc.head);
        gc.label = program.clauses[rc.source].label;
        gc.source = rc.source;
        for (const auto& lit : rc.body) {
            std::uint32_t b = index_of(lit.atom);
            gc.body.push_back({b, lit.negated});
            children[b].insert(gc.head);
        }
        gp.clauses_of_head[gc.head].push_back(
            static_cast<std::uint32_t>(gp.ground_clauses.size()));
        gp.ground_clauses.push_back(std::move(gc));
    }
    for (std::size_t i = 0; i < children.size(); ++i)
        gp.dep_children[i].assign(children[i].begin(), children[i].end());

    // Kahn with a min-heap: topological order is unique-deterministic and
    // lexicographic among simultaneously available atoms.
    std::vector<std::uint32_t> indeg(gp.atoms.size(), 0);
    for (const auto& ch : gp.dep_children)
        for (std::uint32_t c : ch) ++indeg[c];
    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>,
                        std::greater<>>
        ready;
    for (std::uint32_t i = 0; i < indeg.size(); ++i)
        if (indeg[i] == 0) ready.push(i);
    while (!ready.empty()) {
        std::uint32_t a = ready.top();
        ready.pop();
        gp.topo_order.push_back(a);
        for (std::uint32_t c : gp.dep_children[a])
            if (--indeg[c] == 0) ready.push(c);
    }
    if (gp.topo_order.size() != gp.atoms.size()) {
        std::vector<bool> residual(gp.atoms.size(), false);
        for (std::uint32_t i = 0; i < indeg.size(); ++i)
            if (indeg[i] > 0) residual[i] = true;
        throw ModelError("dependency graph is cyclic: " +
                         detail::describe_cycle(gp, residual));
    }
    return gp;
}

// All schema clauses sharing one head predicate, with the per-ground-head
// lists of their ground instances. The unit of estimation.
struct HeadGroup {
    std::string head_predicate;
    std::vector<std::uint32_t> schema_clauses;  // program clause ids, in order
    struct GroundHead {
        std::uint32_t atom;
        // parallel to schema_clauses: ground clause ids instantiating it
        std::vector<std::vector<std::uint32_t>> instances;
    };
    std::vector<GroundHead> ground_heads;
};

inline std::vector<HeadGroup> head_groups(const GroundProgram& gp) {
    std::map<std::string, HeadGroup> by_pred;
    for (std::uint32_t ci = 0; ci < gp.program.clauses.size(); ++ci) {
        const std::string& pred = gp.program.clauses[ci].head.predicate;
        by_pred[pred].schema_clauses.push_back(ci);
    }
    for (auto& [pred, group] : by_pred) {
        group.head_predicate = pred;
        std::map<std::uint32_t, std::size_t> head_slot;
        for (std::uint32_t ai = 0; ai < gp.atoms.size(); ++ai) {
            if (gp.atoms[ai].predicate != pred) continue;
            head_slot[ai] = group.ground_heads.size();
            group.ground_heads.push_back(
                {ai, std::vector<std::vector<std::uint32_t>>(
                         group.schema_clauses.size())});
        }
        std::map<std::uint32_t, std::size_t> clause_slot;
        for (std::size_t s = 0; s < group.schema_clauses.size(); ++s)
            clause_slot[group.schema_clauses[s]] = s;
        for (std::uint32_t gi = 0; gi < gp.ground_clauses.size(); ++gi) {
            const GroundClause& gc = gp.ground_clauses[gi];
            auto it = clause_slot.find(gc.source);
            if (it == clause_slot.end()) continue;
            group.ground_heads[head_slot.at(gc.head)].instances[it->second]
                .push_back(gi);
        }
    }
    std::vector<HeadGroup> out;
    out.reserve(by_pred.size());
    for (auto& [pred, group] : by_pred) out.push_back(std::move(group));
    return out;
}

}  // namespace plp

#endif
