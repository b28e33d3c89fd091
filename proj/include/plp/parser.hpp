#ifndef PLP_PARSER_HPP
#define PLP_PARSER_HPP

#include <cstdlib>
#include <string>
#include <vector>

#include "plp/program.hpp"

namespace plp {

namespace detail {

enum class Tok {
    Ident,      // lowercase identifier
    Variable,   // uppercase identifier
    Number,
    Underscore,
    ColonColon,
    ColonMinus,
    NotSign,    // \+
    LParen,
    RParen,
    Comma,
    Period,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    int line;
    int col;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_ws();
        int line = line_, col = col_;
        if (pos_ >= text_.size()) return {Tok::End, "", line, col};
        char c = text_[pos_];
        if (std::islower(static_cast<unsigned char>(c))) {
            std::string id = read_ident();
            return {Tok::Ident, id, line, col};
        }
        if (std::isupper(static_cast<unsigned char>(c))) {
            std::string id = read_ident();
            return {Tok::Variable, id, line, col};
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (pos_ < text_.size() &&
                   std::isdigit(static_cast<unsigned char>(text_[pos_])))
                num += advance();
            // only eat '.' when a digit follows, so clause periods survive
            if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
                std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
                num += advance();
                while (pos_ < text_.size() &&
                       std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    num += advance();
            }
            return {Tok::Number, num, line, col};
        }
        switch (c) {
            case '_':
                if (pos_ + 1 < text_.size() &&
                    (std::isalnum(static_cast<unsigned char>(text_[pos_ + 1])) ||
                     text_[pos_ + 1] == '_'))
                    throw ParseError("identifiers may not start with '_'", line, col);
                advance();
                return {Tok::Underscore, "_", line, col};
            case ':':
                advance();
                if (pos_ < text_.size() && text_[pos_] == ':') {
                    advance();
                    return {Tok::ColonColon, "::", line, col};
                }
                if (pos_ < text_.size() && text_[pos_] == '-') {
                    advance();
                    return {Tok::ColonMinus, ":-", line, col};
                }
                throw ParseError("expected '::' or ':-'", line, col);
            case '\\':
                advance();
                if (pos_ < text_.size() && text_[pos_] == '+') {
                    advance();
                    return {Tok::NotSign, "\\+", line, col};
                }
                throw ParseError("expected '\\+'", line, col);
            case '(':
                advance();
                return {Tok::LParen, "(", line, col};
            case ')':
                advance();
                return {Tok::RParen, ")", line, col};
            case ',':
                advance();
                return {Tok::Comma, ",", line, col};
            case '.':
                advance();
                return {Tok::Period, ".", line, col};
            default:
                throw ParseError(std::string("unexpected character '") + c + "'",
                                 line, col);
        }
    }

    struct State {
        std::size_t pos;
        int line, col;
    };
    State save() const { return {pos_, line_, col_}; }
    void restore(State s) {
        pos_ = s.pos;
        line_ = s.line;
        col_ = s.col;
    }

private:
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '%') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }
    std::string read_ident() {
        std::string id;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_'))
            id += advance();
        return id;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class ProgramParser {
public:
    explicit ProgramParser(const std::string& text) : lex_(text) { bump(); }

    Program parse() {
        Program prog;
        while (cur_.kind != Tok::End) {
            prog.clauses.push_back(parse_clause(prog));
        }
        return prog;
    }

    // Single ground atom followed by end-of-input (data-file helper).
    Atom parse_single_atom() {
        Atom a = parse_atom();
        expect(Tok::End, "end of atom");
        return a;
    }

private:
    void bump() { cur_ = lex_.next(); }

    void expect(Tok kind, const char* what) {
        if (cur_.kind != kind)
            throw ParseError(std::string("expected ") + what + ", got '" +
                                 (cur_.kind == Tok::End ? "end of input" : cur_.text) +
                                 "'",
                             cur_.line, cur_.col);
    }

    double parse_number_in(double lo, double hi, const char* what) {
        expect(Tok::Number, "probability");
        double v = std::strtod(cur_.text.c_str(), nullptr);
        if (v < lo || v > hi)
            throw ParseError(std::string(what) + " " + cur_.text +
                                 " outside [" + format_probability(lo) + "," +
                                 format_probability(hi) + "]",
                             cur_.line, cur_.col);
        bump();
        return v;
    }

    // Tentatively parse a probability label; backtracks when the clause has
    // none (e.g. a fact whose predicate happens to be `t`).
    Label parse_label(Program& prog) {
        auto mark = lex_.save();
        Token start = cur_;
        if (cur_.kind == Tok::Number) {
            double p = parse_number_in(0.0, 1.0, "probability");
            if (cur_.kind == Tok::ColonColon) {
                bump();
                return Label::fixed(p);
            }
            throw ParseError("expected '::' after probability", cur_.line, cur_.col);
        }
        if (cur_.kind == Tok::Ident && cur_.text == "t") {
            bump();
            if (cur_.kind == Tok::LParen) {
                bump();
                double init = 0.5;
                bool have_init = false;
                if (cur_.kind == Tok::Underscore) {
                    bump();
                } else if (cur_.kind == Tok::Number) {
                    Token numtok = cur_;
                    init = std::strtod(cur_.text.c_str(), nullptr);
                    have_init = true;
                    if (init <= 0.0 || init >= 1.0)
                        throw ParseError("learnable init " + numtok.text +
                                             " outside (0,1)",
                                         numtok.line, numtok.col);
                    bump();
                } else {
                    lex_.restore(mark);
                    cur_ = start;
                    return Label::deterministic();
                }
                if (cur_.kind == Tok::RParen) {
                    bump();
                    if (cur_.kind == Tok::ColonColon) {
                        bump();
                        auto id = static_cast<std::uint32_t>(prog.params.size());
                        prog.params.push_back(init);
                        return Label::learnable(init, id);
                    }
                }
                if (have_init) {
                    // `t(0.3)` not followed by `::` cannot be an atom either
                    // (numbers are not terms), so report it as a bad label.
                    throw ParseError("expected '::' after learnable label",
                                     cur_.line, cur_.col);
                }
            }
            lex_.restore(mark);
            cur_ = start;
        }
        return Label::deterministic();
    }

    Atom parse_atom() {
        expect(Tok::Ident, "predicate name");
        Atom a;
        a.predicate = cur_.text;
        bump();
        if (cur_.kind == Tok::LParen) {
            bump();
            while (true) {
                if (cur_.kind == Tok::Ident || cur_.kind == Tok::Variable) {
                    a.args.push_back(cur_.text);
                    bump();
                } else {
                    throw ParseError("expected constant or variable", cur_.line,
                                     cur_.col);
                }
                if (cur_.kind == Tok::Comma) {
                    bump();
                    continue;
                }
                expect(Tok::RParen, "')'");
                bump();
                break;
            }
        }
        return a;
    }

    void check_arity(Program& prog, const Atom& a, int line, int col) {
        auto [it, inserted] = prog.arities.emplace(a.predicate, a.args.size());
        if (!inserted && it->second != a.args.size())
            throw ParseError("arity conflict for predicate '" + a.predicate +
                                 "': seen with " + std::to_string(it->second) +
                                 " and " + std::to_string(a.args.size()) +
                                 " arguments",
                             line, col);
        for (const auto& t : a.args)
            if (!is_variable(t)) prog.constants.insert(t);
    }

    Clause parse_clause(Program& prog) {
        Clause c;
        c.label = parse_label(prog);
        Token head_tok = cur_;
        c.head = parse_atom();
        check_arity(prog, c.head, head_tok.line, head_tok.col);
        if (cur_.kind == Tok::ColonMinus) {
            bump();
            while (true) {
                Literal lit;
                if (cur_.kind == Tok::NotSign) {
                    lit.negated = true;
                    bump();
                }
                Token tok = cur_;
                lit.atom = parse_atom();
                check_arity(prog, lit.atom, tok.line, tok.col);
                c.body.push_back(std::move(lit));
                if (cur_.kind == Tok::Comma) {
                    bump();
                    continue;
                }
                break;
            }
        }
        expect(Tok::Period, "'.'");
        bump();
        return c;
    }

    Lexer lex_;
    Token cur_{Tok::End, "", 0, 0};
};

}  // namespace detail

inline Program parse_program(const std::string& text) {
    return detail::ProgramParser(text).parse();
}

// Parses one ground atom like `calls(a,b)`; used by the data readers.
inline Atom parse_ground_atom(const std::string& text) {
    Atom a = detail::ProgramParser(text).parse_single_atom();
    if (!a.is_ground())
        throw DataError("atom '" + to_string(a) + "' is not ground");
    return a;
}

}  // namespace plp

#endif
