#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "seqreg/corpus.hpp"
#include "seqreg/error.hpp"

namespace seqreg {

// Cloze-style sentinel vocabulary. A task with E elements uses the first E
// sentinels for its elements and the next one as the tuple separator.
struct SentinelSet {
    std::vector<std::string> pool = {"<X>", "<Y>", "<Z>", "<W>", "<V>", "<U>", "<T>", "<S>"};

    std::vector<std::string> element_sentinels(const TaskSpec& spec) const {
        if (pool.size() < spec.elements.size() + 1)
            raise(ErrorCategory::Input, "sentinel pool too small for task");
        return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.elements.size())};
    }

    const std::string& separator(const TaskSpec& spec) const {
        if (pool.size() < spec.elements.size() + 1)
            raise(ErrorCategory::Input, "sentinel pool too small for task");
        return pool[spec.elements.size()];
    }
};

inline std::string trim_copy(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------------------
// Prompt construction
// ---------------------------------------------------------------------------

struct PromptBundle {
    std::string semantic;
    std::string fewshot;

    std::string assembled(const std::string& text) const {
        return semantic + " " + fewshot + " " + text;
    }
};

// Target string for a tuple list: "<S1> e1 <S2> e2 ..." per tuple, tuples
// joined by the separator sentinel, no trailing separator.
inline std::string serialize_target(const std::vector<SentimentTuple>& tuples,
                                    const TaskSpec& spec, const SentinelSet& sentinels = {}) {
    const auto elem_sent = sentinels.element_sentinels(spec);
    const std::string& sep = sentinels.separator(spec);
    std::string out;
    for (std::size_t t = 0; t < tuples.size(); ++t) {
        validate_tuple(tuples[t], spec, 0, "tuple " + std::to_string(t));
        if (t > 0) out += " " + sep + " ";
        for (std::size_t e = 0; e < spec.elements.size(); ++e) {
            const std::string value = element_value(tuples[t], spec.elements[e]);
            for (const auto& s : sentinels.pool)
                if (value.find(s) != std::string::npos)
                    raise(ErrorCategory::Schema,
                          "tuple " + std::to_string(t) + ": element contains sentinel '" + s + "'");
            if (e > 0) out += " ";
            out += elem_sent[e] + " " + value;
        }
    }
    return out;
}

// Semantic prompt ("Aspect mean <X>, ...") plus the fixed one-shot prompt.
// The shot reuses the target codec on a canonical example so prompt and
// target formats can never drift apart.
inline PromptBundle build_prompt(const TaskSpec& spec, const SentinelSet& sentinels = {}) {
    const auto elem_sent = sentinels.element_sentinels(spec);
    PromptBundle bundle;
    for (std::size_t e = 0; e < spec.elements.size(); ++e) {
        std::string clause = element_name(spec.elements[e]);
        if (e == 0) clause[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(clause[0])));
        bundle.semantic += (e == 0 ? "" : ", ") + clause + " mean " + elem_sent[e];
    }
    bundle.semantic += ".";

    SentimentTuple shot;
    shot.aspect = "sushi";
    if (task_has(spec, Element::Opinion)) shot.opinion = "good";
    if (task_has(spec, Element::Category)) shot.category = "food quality";
    shot.polarity = Polarity::Positive;
    bundle.fewshot =
        "Input : sushi is good . Target : " + serialize_target({shot}, spec, sentinels) + ".";
    return bundle;
}

// ---------------------------------------------------------------------------
// Target parsing (never throws on malformed generations)
// ---------------------------------------------------------------------------

struct ParsedTarget {
    std::vector<SentimentTuple> tuples;
    std::size_t dropped = 0; // malformed or duplicate chunks
};

namespace detail {

inline std::vector<std::string> split_on(const std::string& text, const std::string& sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + sep.size();
    }
    return parts;
}

// One tuple chunk: every element sentinel must occur; values are the spans
// between consecutive sentinels in positional order.
inline std::optional<SentimentTuple> parse_chunk(const std::string& chunk, const TaskSpec& spec,
                                                 const std::vector<std::string>& elem_sent) {
    std::vector<std::pair<std::size_t, std::size_t>> hits; // (position, element index)
    for (std::size_t e = 0; e < elem_sent.size(); ++e) {
        auto pos = chunk.find(elem_sent[e]);
        if (pos == std::string::npos) return std::nullopt;
        hits.push_back({pos, e});
    }
    std::sort(hits.begin(), hits.end());
    std::vector<std::string> values(elem_sent.size());
    for (std::size_t h = 0; h < hits.size(); ++h) {
        const auto [pos, e] = hits[h];
        const std::size_t begin = pos + elem_sent[e].size();
        const std::size_t end = h + 1 < hits.size() ? hits[h + 1].first : chunk.size();
        if (end < begin) return std::nullopt; // overlapping sentinels
        values[e] = trim_copy(chunk.substr(begin, end - begin));
    }
    SentimentTuple t;
    for (std::size_t e = 0; e < spec.elements.size(); ++e) {
        if (values[e].empty()) return std::nullopt;
        switch (spec.elements[e]) {
            case Element::Category: t.category = values[e]; break;
            case Element::Aspect: t.aspect = values[e]; break;
            case Element::Opinion: t.opinion = values[e]; break;
            case Element::Polarity: {
                auto pol = polarity_from_string(values[e]);
                if (!pol) return std::nullopt;
                t.polarity = *pol;
                break;
            }
        }
    }
    return t;
}

} // namespace detail

inline ParsedTarget parse_target(const std::string& text, const TaskSpec& spec,
                                 const SentinelSet& sentinels = {}) {
    const auto elem_sent = sentinels.element_sentinels(spec);
    const std::string& sep = sentinels.separator(spec);
    ParsedTarget out;
    std::set<std::string> seen;
    for (const std::string& chunk : detail::split_on(text, sep)) {
        if (trim_copy(chunk).empty()) continue; // tolerates a trailing separator
        auto tuple = detail::parse_chunk(chunk, spec, elem_sent);
        if (!tuple) {
            ++out.dropped;
            continue;
        }
        std::string key;
        for (Element e : spec.elements) key += element_value(*tuple, e) + '\x1F';
        if (!seen.insert(key).second) {
            ++out.dropped; // duplicate, first occurrence kept
            continue;
        }
        out.tuples.push_back(std::move(*tuple));
    }
    return out;
}

// Equality on the elements a task serializes (spans are not part of the
// codec payload).
inline bool tuples_equal_for_task(const SentimentTuple& a, const SentimentTuple& b,
                                  const TaskSpec& spec) {
    for (Element e : spec.elements)
        if (element_value(a, e) != element_value(b, e)) return false;
    return true;
}

inline bool tuple_lists_equal_for_task(const std::vector<SentimentTuple>& a,
                                       const std::vector<SentimentTuple>& b,
                                       const TaskSpec& spec) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!tuples_equal_for_task(a[i], b[i], spec)) return false;
    return true;
}

} // namespace seqreg
