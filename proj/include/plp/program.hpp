#ifndef PLP_PROGRAM_HPP
#define PLP_PROGRAM_HPP

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace plp {

// Syntax error with source position.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                             ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

// Structural problem with an otherwise well-formed program (cycles, empty
// constant domain, parameter-vector mismatches).
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad observation data (unknown atom, duplicate, incomplete record).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Observation that no parameter choice can explain (head true with nothing
// able to fire, or a deterministic head observed false).
class InconsistencyError : public std::runtime_error {
public:
    explicit InconsistencyError(const std::string& msg)
        : std::runtime_error(msg) {}
};

inline bool is_variable(const std::string& term) {
    return !term.empty() && std::isupper(static_cast<unsigned char>(term[0]));
}

struct Atom {
    std::string predicate;
    std::vector<std::string> args;  // constants (lowercase) or variables (uppercase)

    bool is_ground() const {
        for (const auto& a : args)
            if (is_variable(a)) return false;
        return true;
    }
    bool operator==(const Atom&) const = default;
    auto operator<=>(const Atom&) const = default;
};

struct Literal {
    Atom atom;
    bool negated = false;
    bool operator==(const Literal&) const = default;
    auto operator<=>(const Literal&) const = default;
};

struct Label {
    enum class Kind { Deterministic, Fixed, Learnable };
    Kind kind = Kind::Deterministic;
    double p = 1.0;            // Fixed value, or Learnable init
    std::uint32_t param_id = 0;  // Learnable only

    static Label deterministic() { return {}; }
    static Label fixed(double p) { return {Kind::Fixed, p, 0}; }
    static Label learnable(double init, std::uint32_t id) {
        return {Kind::Learnable, init, id};
    }
    bool learnable_kind() const { return kind == Kind::Learnable; }
    // Failure probability 1-p for likelihood purposes; Deterministic acts as
    // Fixed(1).
    double fixed_q() const {
        return kind == Kind::Deterministic ? 0.0 : 1.0 - p;
    }
    bool operator==(const Label&) const = default;
};

struct Clause {
    Atom head;
    std::vector<Literal> body;  // empty for facts
    Label label;

    bool is_fact() const { return body.empty(); }
    bool operator==(const Clause&) const = default;
};

struct Program {
    std::vector<Clause> clauses;
    std::vector<double> params;       // init value per param_id
    std::set<std::string> constants;  // harvested from clause arguments
    std::map<std::string, std::size_t> arities;

    std::size_t n_params() const { return params.size(); }
    bool operator==(const Program&) const = default;
};

// Shortest decimal that parses back to exactly the same double.
inline std::string format_probability(double p) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, p);
        if (std::strtod(buf, nullptr) == p) break;
    }
    return buf;
}

inline std::string to_string(const Atom& a) {
    std::string s = a.predicate;
    if (!a.args.empty()) {
        s += '(';
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            if (i) s += ',';
            s += a.args[i];
        }
        s += ')';
    }
    return s;
}

inline std::string to_string(const Literal& l) {
    return l.negated ? "\\+" + to_string(l.atom) : to_string(l.atom);
}

inline std::string label_prefix(const Label& label) {
    switch (label.kind) {
        case Label::Kind::Deterministic:
            return "";
        case Label::Kind::Fixed:
            return format_probability(label.p) + "::";
        case Label::Kind::Learnable:
            return "t(" + format_probability(label.p) + ")::";
    }
    return "";
}

inline std::string to_string(const Clause& c) {
    std::string s = label_prefix(c.label) + to_string(c.head);
    if (!c.body.empty()) {
        s += " :- ";
        for (std::size_t i = 0; i < c.body.size(); ++i) {
            if (i) s += ", ";
            s += to_string(c.body[i]);
        }
    }
    return s + ".";
}

inline std::string to_string(const Program& p) {
    std::string s;
    for (const auto& c : p.clauses) {
        s += to_string(c);
        s += '\n';
    }
    return s;
}

}  // namespace plp

#endif
