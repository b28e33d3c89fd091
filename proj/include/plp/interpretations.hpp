#ifndef PLP_INTERPRETATIONS_HPP
#define PLP_INTERPRETATIONS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plp/ground.hpp"
#include "plp/parser.hpp"
#include "plp/program.hpp"

namespace plp {

// Complete truth assignments over a ground program's atoms; duplicate records
// are stored once with an integer weight.
struct InterpretationSet {
    std::size_t n_atoms = 0;
    std::vector<std::vector<std::uint8_t>> records;
    std::vector<std::uint64_t> weights;

    std::uint64_t total_weight() const {
        std::uint64_t t = 0;
        for (auto w : weights) t += w;
        return t;
    }
    void add_record(std::vector<std::uint8_t> rec, std::uint64_t weight = 1) {
        auto [it, inserted] = dedup_.emplace(rec, records.size());
        if (!inserted) {
            weights[it->second] += weight;
            return;
        }
        records.push_back(std::move(rec));
        weights.push_back(weight);
    }

private:
    std::map<std::vector<std::uint8_t>, std::size_t> dedup_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool comment_or_blank(const std::string& line) {
    return line.empty() || line[0] == '%' || line[0] == '#';
}

inline InterpretationSet parse_blocks(const std::string& text,
                                      const GroundProgram& gp) {
    InterpretationSet out;
    out.n_atoms = gp.n_atoms();
    std::vector<std::optional<bool>> current(gp.n_atoms());
    bool any_line = false;
    std::size_t record_no = 1;

    auto flush = [&]() {
        for (std::size_t i = 0; i < current.size(); ++i)
            if (!current[i])
                throw DataError("incomplete interpretation: " +
                                to_string(gp.atoms[i]) + " unassigned (record " +
                                std::to_string(record_no) + ")");
        std::vector<std::uint8_t> rec(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) rec[i] = *current[i];
        out.add_record(std::move(rec));
        current.assign(gp.n_atoms(), std::nullopt);
        any_line = false;
        ++record_no;
    };

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        std::string line = trim(raw);
        if (comment_or_blank(line)) continue;
        if (line == "---") {
            if (any_line) flush();
            continue;
        }
        bool value = true;
        if (line.rfind("\\+", 0) == 0) {
            value = false;
            line = trim(line.substr(2));
        }
        if (line.empty() || line.back() != '.')
            throw DataError("expected 'atom.' or '\\+atom.' in record " +
                            std::to_string(record_no) + ", got '" + trim(raw) +
                            "'");
        Atom a = parse_ground_atom(line.substr(0, line.size() - 1));
        auto idx = gp.atom_index(a);
        if (!idx)
            throw DataError("unknown atom '" + to_string(a) + "' in record " +
                            std::to_string(record_no));
        if (current[*idx])
            throw DataError("duplicate atom '" + to_string(a) + "' in record " +
                            std::to_string(record_no));
        current[*idx] = value;
        any_line = true;
    }
    if (any_line) flush();
    return out;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

inline InterpretationSet parse_csv(const std::string& text,
                                   const GroundProgram& gp) {
    for (const auto& a : gp.atoms)
        if (!a.args.empty())
            throw DataError(
                "CSV data requires a propositional program; ground atom '" +
                to_string(a) + "' has arguments");

    std::istringstream in(text);
    std::string raw;
    std::vector<std::uint32_t> columns;
    std::vector<bool> assigned(gp.n_atoms(), false);
    while (std::getline(in, raw)) {
        std::string line = trim(raw);
        if (comment_or_blank(line)) continue;
        for (const auto& name : split_csv_row(line)) {
            auto idx = gp.atom_index(Atom{name, {}});
            if (!idx) throw DataError("unknown atom '" + name + "' in CSV header");
            if (assigned[*idx])
                throw DataError("duplicate atom '" + name + "' in CSV header");
            assigned[*idx] = true;
            columns.push_back(*idx);
        }
        break;
    }
    for (std::size_t i = 0; i < assigned.size(); ++i)
        if (!assigned[i])
            throw DataError("incomplete interpretation: " +
                            to_string(gp.atoms[i]) + " unassigned (CSV header)");

    InterpretationSet out;
    out.n_atoms = gp.n_atoms();
    std::size_t row_no = 1;
    while (std::getline(in, raw)) {
        std::string line = trim(raw);
        if (comment_or_blank(line)) continue;
        auto cells = split_csv_row(line);
        if (cells.size() != columns.size())
            throw DataError("CSV row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(columns.size()));
        std::vector<std::uint8_t> rec(gp.n_atoms());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i] != "0" && cells[i] != "1")
                throw DataError("CSV row " + std::to_string(row_no) +
                                ": expected 0 or 1, got '" + cells[i] + "'");
            rec[columns[i]] = cells[i] == "1";
        }
        out.add_record(std::move(rec));
        ++row_no;
    }
    return out;
}

}  // namespace detail

// Accepts either the block format (records of `atom.` / `\+atom.` lines
// separated by `---`) or CSV with 0-ary atom names as the header row.
inline InterpretationSet parse_interpretations(const std::string& text,
                                               const GroundProgram& gp) {
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        std::string line = detail::trim(raw);
        if (detail::comment_or_blank(line)) continue;
        bool blockish = line == "---" || line.rfind("\\+", 0) == 0 ||
                        (!line.empty() && line.back() == '.');
        return blockish ? detail::parse_blocks(text, gp)
                        : detail::parse_csv(text, gp);
    }
    InterpretationSet empty;
    empty.n_atoms = gp.n_atoms();
    return empty;
}

// Block-format serialization; optional header comment lines go in verbatim.
inline std::string write_blocks(const InterpretationSet& data,
                                const GroundProgram& gp,
                                const std::string& header = "") {
    std::string out = header;
    for (std::size_t r = 0; r < data.records.size(); ++r) {
        for (std::uint64_t w = 0; w < data.weights[r]; ++w) {
            for (std::size_t i = 0; i < data.records[r].size(); ++i) {
                if (!data.records[r][i]) out += "\\+";
                out += to_string(gp.atoms[i]);
                out += ".\n";
            }
            out += "---\n";
        }
    }
    return out;
}

}  // namespace plp

#endif
