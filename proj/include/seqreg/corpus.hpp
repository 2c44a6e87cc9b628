#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqreg/error.hpp"
#include "seqreg/matrix.hpp"

namespace seqreg {

// ---------------------------------------------------------------------------
// Dependency-parsed sentences
// ---------------------------------------------------------------------------

struct Token {
    static constexpr int kRoot = -1; // head value marking the root token

    std::size_t index = 0;  // 0-based position in the sentence
    std::string surface;
    int head = kRoot;        // 0-based parent index, kRoot for the root
    std::string deprel;      // lowercase dependency relation
};

struct DepSentence {
    std::string id;
    std::vector<Token> tokens;
    std::optional<Matrix> reprs; // n x dim contextual representations

    std::size_t size() const { return tokens.size(); }
};

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Checks the single-tree invariants: every head in range, exactly one root,
// no cycles, all nodes reachable from the root.
inline void validate_tree(const DepSentence& s) {
    const std::size_t n = s.size();
    if (n == 0) raise(ErrorCategory::Structure, "sentence '" + s.id + "': empty sentence");
    std::size_t roots = 0;
    for (const Token& t : s.tokens) {
        if (t.deprel.empty())
            raise(ErrorCategory::Structure, "sentence '" + s.id + "': empty deprel");
        if (t.head == Token::kRoot) {
            ++roots;
        } else if (t.head < 0 || static_cast<std::size_t>(t.head) >= n) {
            raise(ErrorCategory::Structure,
                  "sentence '" + s.id + "': head out of range for token " +
                      std::to_string(t.index));
        } else if (static_cast<std::size_t>(t.head) == t.index) {
            raise(ErrorCategory::Structure,
                  "sentence '" + s.id + "': token " + std::to_string(t.index) +
                      " is its own head");
        }
    }
    if (roots != 1)
        raise(ErrorCategory::Structure,
              "sentence '" + s.id + "': expected exactly one root, found " +
                  std::to_string(roots));
    // Walking parents from any node must reach the root in <= n steps.
    for (std::size_t i = 0; i < n; ++i) {
        int cur = static_cast<int>(i);
        std::size_t steps = 0;
        while (cur != Token::kRoot) {
            cur = s.tokens[static_cast<std::size_t>(cur)].head;
            if (++steps > n)
                raise(ErrorCategory::Structure,
                      "sentence '" + s.id + "': cycle through token " + std::to_string(i));
        }
    }
    if (s.reprs) {
        if (s.reprs->rows() != n)
            raise(ErrorCategory::Dimension,
                  "sentence '" + s.id + "': representation rows != token count");
        if (!s.reprs->all_finite())
            raise(ErrorCategory::Numeric,
                  "sentence '" + s.id + "': non-finite representation entry");
    }
}

// Reads CoNLL-U text (10 tab-separated columns, blank-line separated blocks).
// Multiword ranges (1-2) and empty nodes (1.1) are skipped; `# sent_id =`
// comments name the sentence, otherwise sentences are numbered from 1.
inline std::vector<DepSentence> parse_conllu(const std::string& text) {
    std::vector<DepSentence> out;
    DepSentence cur;
    std::string pending_id;
    bool in_block = false;
    std::size_t ordinal = 0;

    auto flush = [&]() {
        if (!in_block) return;
        ++ordinal;
        cur.id = pending_id.empty() ? std::to_string(ordinal) : pending_id;
        validate_tree(cur);
        out.push_back(std::move(cur));
        cur = DepSentence{};
        pending_id.clear();
        in_block = false;
    };

    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') {
            const std::string key = "# sent_id";
            if (line.compare(0, key.size(), key) == 0) {
                auto eq = line.find('=');
                if (eq != std::string::npos) {
                    std::string v = line.substr(eq + 1);
                    v.erase(0, v.find_first_not_of(" \t"));
                    v.erase(v.find_last_not_of(" \t") + 1);
                    pending_id = v;
                }
            }
            continue;
        }
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            if (tab == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (cols.size() != 10)
            raise(ErrorCategory::Format,
                  "line " + std::to_string(lineno) + ": expected 10 columns, found " +
                      std::to_string(cols.size()));
        const std::string& id_col = cols[0];
        if (id_col.find('-') != std::string::npos || id_col.find('.') != std::string::npos)
            continue; // multiword range or empty node
        in_block = true;
        Token t;
        t.index = cur.tokens.size();
        t.surface = cols[1];
        try {
            std::size_t pos = 0;
            int head1 = std::stoi(cols[6], &pos);
            if (pos != cols[6].size() || head1 < 0) throw std::invalid_argument("head");
            t.head = head1 == 0 ? Token::kRoot : head1 - 1;
        } catch (const std::exception&) {
            raise(ErrorCategory::Format,
                  "line " + std::to_string(lineno) + ": HEAD column is not a non-negative integer");
        }
        t.deprel = to_lower(cols[7]);
        if (t.deprel.empty())
            raise(ErrorCategory::Format, "line " + std::to_string(lineno) + ": empty DEPREL");
        cur.tokens.push_back(std::move(t));
    }
    flush();
    return out;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCategory::Input, "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<DepSentence> parse_conllu_file(const std::string& path) {
    return parse_conllu(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Directed adjacency matrix: DA[i][j] = 1 iff token i heads token j
// ---------------------------------------------------------------------------

struct AdjMatrix {
    std::size_t n = 0;
    std::vector<std::uint8_t> cells; // row-major n x n

    bool at(std::size_t i, std::size_t j) const { return cells[i * n + j] != 0; }

    std::size_t ones() const {
        std::size_t c = 0;
        for (auto v : cells) c += v;
        return c;
    }
};

inline AdjMatrix adjacency(const DepSentence& s) {
    const std::size_t n = s.size();
    AdjMatrix da;
    da.n = n;
    da.cells.assign(n * n, 0);
    for (const Token& t : s.tokens)
        if (t.head != Token::kRoot)
            da.cells[static_cast<std::size_t>(t.head) * n + t.index] = 1;
    return da;
}

// Neighborhoods used by the syntax encoder: out-neighbors (children) plus a
// self-loop, in ascending index order.
inline std::vector<std::vector<std::size_t>> neighborhoods(const AdjMatrix& da) {
    std::vector<std::vector<std::size_t>> nbr(da.n);
    for (std::size_t i = 0; i < da.n; ++i) {
        for (std::size_t j = 0; j < da.n; ++j)
            if (j == i || da.at(i, j)) nbr[i].push_back(j);
    }
    return nbr;
}

// ---------------------------------------------------------------------------
// ABSA tasks and sentiment tuples
// ---------------------------------------------------------------------------

enum class Task { UABSA, ASTE, TASD, ACOS };
enum class Element { Category, Aspect, Opinion, Polarity };
enum class Polarity { Positive, Negative, Neutral };

struct TaskSpec {
    Task task;
    std::vector<Element> elements; // fixed per-task order
};

inline TaskSpec task_spec(Task t) {
    switch (t) {
        case Task::UABSA: return {t, {Element::Aspect, Element::Polarity}};
        case Task::ASTE: return {t, {Element::Aspect, Element::Opinion, Element::Polarity}};
        case Task::TASD: return {t, {Element::Category, Element::Aspect, Element::Polarity}};
        case Task::ACOS:
            return {t, {Element::Category, Element::Aspect, Element::Opinion, Element::Polarity}};
    }
    raise(ErrorCategory::Input, "unknown task");
}

inline const char* task_name(Task t) {
    switch (t) {
        case Task::UABSA: return "uabsa";
        case Task::ASTE: return "aste";
        case Task::TASD: return "tasd";
        case Task::ACOS: return "acos";
    }
    return "?";
}

inline TaskSpec task_spec_from_name(const std::string& name) {
    std::string n = to_lower(name);
    if (n == "uabsa") return task_spec(Task::UABSA);
    if (n == "aste") return task_spec(Task::ASTE);
    if (n == "tasd") return task_spec(Task::TASD);
    if (n == "acos") return task_spec(Task::ACOS);
    raise(ErrorCategory::Input, "unknown task: " + name);
}

inline bool task_has(const TaskSpec& spec, Element e) {
    return std::find(spec.elements.begin(), spec.elements.end(), e) != spec.elements.end();
}

inline const char* polarity_name(Polarity p) {
    switch (p) {
        case Polarity::Positive: return "positive";
        case Polarity::Negative: return "negative";
        case Polarity::Neutral: return "neutral";
    }
    return "?";
}

inline std::optional<Polarity> polarity_from_string(const std::string& s) {
    std::string v = to_lower(s);
    if (v == "positive") return Polarity::Positive;
    if (v == "negative") return Polarity::Negative;
    if (v == "neutral") return Polarity::Neutral;
    return std::nullopt;
}

using Span = std::pair<std::size_t, std::size_t>; // [start, end) token indices

struct SentimentTuple {
    std::optional<std::string> category;
    std::string aspect; // may be the literal "NULL"
    std::optional<std::string> opinion;
    Polarity polarity = Polarity::Positive;
    std::optional<Span> aspect_span;
    std::optional<Span> opinion_span;
};

// The value a tuple carries for one task element, as serialized in targets.
inline std::string element_value(const SentimentTuple& t, Element e) {
    switch (e) {
        case Element::Category: return t.category.value_or("");
        case Element::Aspect: return t.aspect;
        case Element::Opinion: return t.opinion.value_or("");
        case Element::Polarity: return polarity_name(t.polarity);
    }
    return "";
}

inline const char* element_name(Element e) {
    switch (e) {
        case Element::Category: return "category";
        case Element::Aspect: return "aspect";
        case Element::Opinion: return "opinion";
        case Element::Polarity: return "sentiment";
    }
    return "?";
}

struct LabeledExample {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
    std::vector<SentimentTuple> tuples;
    std::optional<DepSentence> parse;
};

// Validates a tuple against the owning task: required elements present,
// elements outside the task signature absent, spans inside the token range.
inline void validate_tuple(const SentimentTuple& t, const TaskSpec& spec,
                           std::size_t token_count, const std::string& example_id) {
    auto fail = [&](const std::string& msg) {
        raise(ErrorCategory::Schema, "example '" + example_id + "': " + msg);
    };
    const bool wants_category = task_has(spec, Element::Category);
    const bool wants_opinion = task_has(spec, Element::Opinion);
    if (wants_category && !t.category) fail("missing category");
    if (!wants_category && t.category) fail("unexpected category");
    if (wants_opinion && !t.opinion) fail("missing opinion");
    if (!wants_opinion && t.opinion) fail("unexpected opinion");
    if (t.aspect.empty()) fail("empty aspect");
    auto check_span = [&](const std::optional<Span>& sp, const char* which) {
        if (!sp) return;
        if (sp->first >= sp->second) fail(std::string(which) + " span is empty or reversed");
        if (token_count > 0 && sp->second > token_count)
            fail(std::string(which) + " span exceeds token range");
    };
    check_span(t.aspect_span, "aspect");
    check_span(t.opinion_span, "opinion");
}

struct LoadOptions {
    bool require_tuples = true; // gold data must label at least one tuple
    bool require_text = true;   // prediction files may omit text/tokens
};

// Reads example JSONL: one object per line with id/text/tokens/tuples.
inline std::vector<LabeledExample> load_examples_text(const std::string& text,
                                                      const TaskSpec& spec,
                                                      const LoadOptions& opts = {}) {
    using nlohmann::json;
    std::vector<LabeledExample> out;
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorCategory::Format,
                  "line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
        LabeledExample ex;
        ex.id = j.value("id", std::to_string(lineno));
        auto fail = [&](const std::string& msg) {
            raise(ErrorCategory::Schema, "example '" + ex.id + "': " + msg);
        };
        if (opts.require_text && (!j.contains("text") || !j.contains("tokens")))
            fail("missing text or tokens");
        ex.text = j.value("text", std::string());
        if (j.contains("tokens") && j["tokens"].is_array())
            for (const auto& tok : j["tokens"]) ex.tokens.push_back(tok.get<std::string>());
        if (!j.contains("tuples") || !j["tuples"].is_array()) fail("missing tuples array");
        for (const auto& tj : j["tuples"]) {
            SentimentTuple t;
            if (tj.contains("category") && !tj["category"].is_null())
                t.category = tj["category"].get<std::string>();
            if (!tj.contains("aspect") || !tj["aspect"].is_string()) fail("missing aspect");
            t.aspect = tj["aspect"].get<std::string>();
            if (tj.contains("opinion") && !tj["opinion"].is_null())
                t.opinion = tj["opinion"].get<std::string>();
            if (!tj.contains("polarity") || !tj["polarity"].is_string()) fail("missing polarity");
            auto pol = polarity_from_string(tj["polarity"].get<std::string>());
            if (!pol) fail("unknown polarity '" + tj["polarity"].get<std::string>() + "'");
            t.polarity = *pol;
            auto read_span = [&](const char* key) -> std::optional<Span> {
                if (!tj.contains(key) || tj[key].is_null()) return std::nullopt;
                const auto& a = tj[key];
                if (!a.is_array() || a.size() != 2 || !a[0].is_number_integer() ||
                    !a[1].is_number_integer() || a[0].get<long long>() < 0 ||
                    a[1].get<long long>() < 0)
                    fail(std::string(key) + " must be [start, end] with non-negative ints");
                return Span{static_cast<std::size_t>(a[0].get<long long>()),
                            static_cast<std::size_t>(a[1].get<long long>())};
            };
            t.aspect_span = read_span("aspect_span");
            t.opinion_span = read_span("opinion_span");
            validate_tuple(t, spec, ex.tokens.size(), ex.id);
            ex.tuples.push_back(std::move(t));
        }
        if (opts.require_tuples && ex.tuples.empty()) fail("gold example has no tuples");
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<LabeledExample> load_examples(const std::string& path, const TaskSpec& spec,
                                                 const LoadOptions& opts = {}) {
    return load_examples_text(read_text_file(path), spec, opts);
}

// ---------------------------------------------------------------------------
// Deterministic fallback representations
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t h, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    return fnv1a64(h, bytes, 8);
}

// Entry (i, j) = signed(FNV-1a(seed || token_i || j)) / 2^63, in [-1, 1).
// Seed and column index enter the hash as 8 little-endian bytes each, so the
// matrix is a bit-exact pure function of (tokens, dim, seed).
inline Matrix hash_reprs(const std::vector<std::string>& tokens, std::size_t dim,
                         std::int64_t seed) {
    if (dim == 0) raise(ErrorCategory::Input, "hash_reprs: dim must be >= 1");
    constexpr std::uint64_t kOffset = 0xCBF29CE484222325ULL;
    Matrix m(tokens.size(), dim);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::uint64_t base = fnv1a64_u64(kOffset, static_cast<std::uint64_t>(seed));
        base = fnv1a64(base, tokens[i].data(), tokens[i].size());
        for (std::size_t j = 0; j < dim; ++j) {
            std::uint64_t h = fnv1a64_u64(base, static_cast<std::uint64_t>(j));
            m(i, j) = static_cast<double>(static_cast<std::int64_t>(h)) * 0x1.0p-63;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Representation matrix file: first line "n dim", then n rows of doubles
// ---------------------------------------------------------------------------

inline Matrix read_matrix_text(const std::string& text) {
    std::istringstream in(text);
    std::size_t n = 0, dim = 0;
    if (!(in >> n >> dim) || dim == 0)
        raise(ErrorCategory::Format, "matrix file: bad header, expected 'n dim'");
    Matrix m(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            if (!(in >> m(i, j)))
                raise(ErrorCategory::Format,
                      "matrix file: missing value at row " + std::to_string(i));
    if (!m.all_finite()) raise(ErrorCategory::Numeric, "matrix file: non-finite entry");
    return m;
}

inline Matrix read_matrix_file(const std::string& path) {
    return read_matrix_text(read_text_file(path));
}

} // namespace seqreg
