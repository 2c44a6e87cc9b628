#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqreg/corpus.hpp"
#include "seqreg/error.hpp"

namespace seqreg {

// Lowercased, whitespace-collapsed form used for exact-match comparison.
inline std::string normalize_match(const std::string& s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

inline std::string tuple_match_key(const SentimentTuple& t, const TaskSpec& spec) {
    std::string key;
    for (Element e : spec.elements) key += normalize_match(element_value(t, e)) + '\x1F';
    return key;
}

struct EvalReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t gold = 0;
    std::size_t predicted = 0;
    std::size_t matched = 0;
    std::vector<std::pair<std::string, EvalReport>> per_bucket;

    void finalize() {
        precision = predicted ? static_cast<double>(matched) / static_cast<double>(predicted) : 0.0;
        recall = gold ? static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
        f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
};

// Micro precision/recall/F1 over exact tuple matches: a prediction matches
// iff every task element equals a not-yet-matched gold tuple of the same
// example (case-insensitive, whitespace-normalized).
inline EvalReport score_f1(const std::vector<std::vector<SentimentTuple>>& gold,
                           const std::vector<std::vector<SentimentTuple>>& pred,
                           const TaskSpec& spec) {
    if (gold.size() != pred.size())
        raise(ErrorCategory::Input, "score_f1: gold and pred example counts differ");
    EvalReport rep;
    for (std::size_t ex = 0; ex < gold.size(); ++ex) {
        rep.gold += gold[ex].size();
        rep.predicted += pred[ex].size();
        std::vector<bool> taken(gold[ex].size(), false);
        for (const auto& p : pred[ex]) {
            const std::string key = tuple_match_key(p, spec);
            for (std::size_t g = 0; g < gold[ex].size(); ++g) {
                if (!taken[g] && tuple_match_key(gold[ex][g], spec) == key) {
                    taken[g] = true;
                    ++rep.matched;
                    break;
                }
            }
        }
    }
    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// Distance-bucketed report
// ---------------------------------------------------------------------------

struct DistanceBuckets {
    std::vector<std::size_t> boundaries = {10, 16}; // labels <=10 / 11-16 / >=17

    std::size_t count() const { return boundaries.size() + 1; }

    std::size_t bucket_of(std::size_t distance) const {
        for (std::size_t i = 0; i < boundaries.size(); ++i)
            if (distance <= boundaries[i]) return i;
        return boundaries.size();
    }

    std::string label(std::size_t i) const {
        if (i == 0) return "≤" + std::to_string(boundaries[0]);
        if (i < boundaries.size())
            return std::to_string(boundaries[i - 1] + 1) + "–" + std::to_string(boundaries[i]);
        return "≥" + std::to_string(boundaries.back() + 1);
    }
};

inline void validate_buckets(const DistanceBuckets& b) {
    if (b.boundaries.empty()) raise(ErrorCategory::Input, "distance buckets: empty boundary list");
    for (std::size_t i = 0; i < b.boundaries.size(); ++i) {
        if (b.boundaries[i] == 0)
            raise(ErrorCategory::Input, "distance buckets: boundaries must be positive");
        if (i > 0 && b.boundaries[i] <= b.boundaries[i - 1])
            raise(ErrorCategory::Input, "distance buckets: boundaries must be strictly ascending");
    }
}

inline constexpr const char* kResidualBucket = "unresolved";

namespace detail {

// Token position of a span: the index of its last token (head word of
// multiword terms is unannotated in the data).
inline std::size_t span_position(const Span& sp) { return sp.second - 1; }

// Locates `value` as a token subsequence (case-insensitive) and returns the
// position of its final token.
inline std::optional<std::size_t> locate_tokens(const std::vector<std::string>& tokens,
                                                const std::string& value) {
    std::vector<std::string> needle;
    std::string cur;
    for (char c : value + " ") {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) needle.push_back(normalize_match(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (needle.empty() || needle.size() > tokens.size()) return std::nullopt;
    for (std::size_t start = 0; start + needle.size() <= tokens.size(); ++start) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size(); ++k)
            if (normalize_match(tokens[start + k]) != needle[k]) {
                ok = false;
                break;
            }
        if (ok) return start + needle.size() - 1;
    }
    return std::nullopt;
}

} // namespace detail

// Per-bucket F1 over aspect-opinion distance: each gold tuple belongs to the
// bucket of |aspect position - opinion position| in raw tokens; matched
// predictions score in the matched gold's bucket; unmatched ones in the
// bucket of their own distance when resolvable, otherwise in "unresolved".
inline EvalReport distance_report(const std::vector<LabeledExample>& examples,
                                  const std::vector<std::vector<SentimentTuple>>& pred,
                                  const DistanceBuckets& buckets, const TaskSpec& spec) {
    validate_buckets(buckets);
    if (!task_has(spec, Element::Opinion))
        raise(ErrorCategory::Input, "distance_report: task has no opinion element");
    if (examples.size() != pred.size())
        raise(ErrorCategory::Input, "distance_report: gold and pred example counts differ");

    const std::size_t nb = buckets.count();
    std::vector<std::size_t> bucket_gold(nb + 1, 0), bucket_pred(nb + 1, 0), bucket_match(nb + 1, 0);
    EvalReport rep;

    for (std::size_t ex = 0; ex < examples.size(); ++ex) {
        const auto& gold = examples[ex].tuples;
        std::vector<std::size_t> gold_bucket(gold.size());
        for (std::size_t g = 0; g < gold.size(); ++g) {
            if (!gold[g].aspect_span || !gold[g].opinion_span)
                raise(ErrorCategory::Input,
                      "distance_report: example '" + examples[ex].id + "' gold tuple lacks spans");
            const std::size_t a = detail::span_position(*gold[g].aspect_span);
            const std::size_t o = detail::span_position(*gold[g].opinion_span);
            const std::size_t dist = a > o ? a - o : o - a;
            gold_bucket[g] = buckets.bucket_of(dist);
            ++bucket_gold[gold_bucket[g]];
        }
        rep.gold += gold.size();
        rep.predicted += pred[ex].size();

        std::vector<bool> taken(gold.size(), false);
        for (const auto& p : pred[ex]) {
            const std::string key = tuple_match_key(p, spec);
            bool hit = false;
            for (std::size_t g = 0; g < gold.size(); ++g) {
                if (!taken[g] && tuple_match_key(gold[g], spec) == key) {
                    taken[g] = true;
                    ++rep.matched;
                    ++bucket_pred[gold_bucket[g]];
                    ++bucket_match[gold_bucket[g]];
                    hit = true;
                    break;
                }
            }
            if (hit) continue;
            // False positive: bucket by its own distance when resolvable.
            std::optional<std::size_t> a_pos, o_pos;
            if (p.aspect_span) a_pos = detail::span_position(*p.aspect_span);
            else a_pos = detail::locate_tokens(examples[ex].tokens, p.aspect);
            if (p.opinion_span) o_pos = detail::span_position(*p.opinion_span);
            else if (p.opinion) o_pos = detail::locate_tokens(examples[ex].tokens, *p.opinion);
            if (a_pos && o_pos) {
                const std::size_t dist = *a_pos > *o_pos ? *a_pos - *o_pos : *o_pos - *a_pos;
                ++bucket_pred[buckets.bucket_of(dist)];
            } else {
                ++bucket_pred[nb]; // residual
            }
        }
    }

    for (std::size_t b = 0; b < nb; ++b) {
        EvalReport br;
        br.gold = bucket_gold[b];
        br.predicted = bucket_pred[b];
        br.matched = bucket_match[b];
        br.finalize();
        rep.per_bucket.push_back({buckets.label(b), br});
    }
    if (bucket_pred[nb] > 0) {
        EvalReport br;
        br.predicted = bucket_pred[nb];
        br.finalize();
        rep.per_bucket.push_back({kResidualBucket, br});
    }
    rep.finalize();
    return rep;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& rep) {
    nlohmann::ordered_json j;
    j["precision"] = rep.precision;
    j["recall"] = rep.recall;
    j["f1"] = rep.f1;
    j["counts"] = {{"gold", rep.gold}, {"predicted", rep.predicted}, {"matched", rep.matched}};
    if (!rep.per_bucket.empty()) {
        nlohmann::ordered_json pb = nlohmann::ordered_json::object();
        for (const auto& [label, sub] : rep.per_bucket) pb[label] = report_to_json(sub);
        j["per_bucket"] = pb;
    }
    return j;
}

} // namespace seqreg
