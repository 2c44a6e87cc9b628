#pragma once

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>

#include "seqreg/corpus.hpp"
#include "seqreg/error.hpp"

namespace seqreg {

// Dependency-relation priority table driving the static reorder: lower rank
// means the child is visited earlier. "self" is the fallback row for
// relations the table does not list.
struct RuleTable {
    std::string name; // rule1 | rule2 | rule3 | custom
    std::unordered_map<std::string, int> ranks;

    int rank_of(const std::string& deprel) const {
        auto it = ranks.find(deprel);
        if (it != ranks.end()) return it->second;
        it = ranks.find("self");
        if (it != ranks.end()) return it->second;
        return std::numeric_limits<int>::max();
    }
};

namespace detail {

struct RuleRow {
    std::string_view deprel;
    int rule1, rule2, rule3;
};

// The three shipped priority tables, 47 relations each; every column is a
// permutation of 1..47.
inline constexpr std::array<RuleRow, 47> kRuleRows = {{
    {"root", 1, 1, 1},       {"acl", 2, 30, 5},       {"acomp", 3, 2, 2},
    {"advcl", 4, 29, 3},     {"advmod", 5, 3, 4},     {"agent", 6, 28, 6},
    {"amod", 7, 27, 19},     {"appos", 8, 45, 20},    {"attr", 9, 4, 7},
    {"auxpass", 10, 11, 30}, {"case", 11, 46, 31},    {"cc", 12, 24, 12},
    {"ccomp", 13, 25, 13},   {"compound", 14, 26, 14},{"conj", 15, 6, 10},
    {"csubj", 16, 7, 32},    {"csubjpass", 17, 31, 29},{"dative", 18, 32, 44},
    {"dep", 19, 22, 15},     {"det", 20, 8, 16},      {"dobj", 21, 42, 17},
    {"expl", 22, 33, 33},    {"intj", 23, 23, 34},    {"mark", 24, 35, 28},
    {"meta", 25, 34, 35},    {"neg", 26, 10, 8},      {"nmod", 27, 21, 9},
    {"npadvmod", 28, 36, 36},{"nsubj", 29, 5, 21},    {"nsubjpass", 30, 12, 11},
    {"nummod", 31, 40, 43},  {"oprd", 32, 37, 41},    {"parataxis", 33, 38, 42},
    {"pcomp", 34, 13, 22},   {"pobj", 35, 19, 26},    {"poss", 36, 39, 27},
    {"preconj", 37, 20, 23}, {"predet", 38, 41, 45},  {"prep", 39, 9, 18},
    {"prt", 40, 43, 38},     {"punct", 41, 14, 39},   {"quantmod", 42, 44, 40},
    {"relcl", 43, 17, 37},   {"xcom", 44, 15, 46},    {"aux", 45, 16, 24},
    {"xcomp", 46, 18, 25},   {"self", 47, 47, 47},
}};

} // namespace detail

inline RuleTable builtin_rule_table(const std::string& name) {
    int which;
    if (name == "rule1") which = 1;
    else if (name == "rule2") which = 2;
    else if (name == "rule3") which = 3;
    else raise(ErrorCategory::Input, "unknown builtin rule table: " + name);
    RuleTable t;
    t.name = name;
    for (const auto& row : detail::kRuleRows) {
        int rank = which == 1 ? row.rule1 : which == 2 ? row.rule2 : row.rule3;
        t.ranks.emplace(std::string(row.deprel), rank);
    }
    return t;
}

// Loads `deprel<TAB>rank` TSV. Duplicate relations and non-positive ranks are
// format errors.
inline RuleTable load_rule_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCategory::Input, "cannot open rule table: " + path);
    RuleTable t;
    t.name = std::filesystem::path(path).stem().string();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            raise(ErrorCategory::Format,
                  path + ":" + std::to_string(lineno) + ": expected 'deprel<TAB>rank'");
        std::string deprel = to_lower(line.substr(0, tab));
        int rank = 0;
        try {
            std::size_t pos = 0;
            rank = std::stoi(line.substr(tab + 1), &pos);
        } catch (const std::exception&) {
            raise(ErrorCategory::Format,
                  path + ":" + std::to_string(lineno) + ": rank is not an integer");
        }
        if (rank <= 0)
            raise(ErrorCategory::Format,
                  path + ":" + std::to_string(lineno) + ": rank must be positive");
        if (!t.ranks.emplace(deprel, rank).second)
            raise(ErrorCategory::Format,
                  path + ":" + std::to_string(lineno) + ": duplicate deprel '" + deprel + "'");
    }
    if (t.ranks.empty()) raise(ErrorCategory::Format, path + ": empty rule table");
    return t;
}

// Resolves a --rule argument: an existing path is loaded as a custom table;
// rule1/rule2/rule3 come from $SEQREG_RULES_DIR when set, otherwise from the
// compiled-in copies of the shipped tables.
inline RuleTable resolve_rule_table(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (fs::exists(fs::path(name_or_path)) && fs::is_regular_file(name_or_path))
        return load_rule_table(name_or_path);
    if (name_or_path == "rule1" || name_or_path == "rule2" || name_or_path == "rule3") {
        if (const char* dir = std::getenv("SEQREG_RULES_DIR")) {
            fs::path p = fs::path(dir) / (name_or_path + ".tsv");
            if (fs::exists(p)) return load_rule_table(p.string());
            raise(ErrorCategory::Input,
                  "SEQREG_RULES_DIR is set but " + p.string() + " does not exist");
        }
        return builtin_rule_table(name_or_path);
    }
    raise(ErrorCategory::Input, "no such rule table or file: " + name_or_path);
}

} // namespace seqreg
