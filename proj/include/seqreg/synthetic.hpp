#pragma once

#include <string>
#include <vector>

#include "seqreg/corpus.hpp"
#include "seqreg/rng.hpp"

namespace seqreg {

// Uniformly chosen deprels for generated fixtures.
inline const std::vector<std::string>& common_deprels() {
    static const std::vector<std::string> rels = {
        "nsubj", "dobj",  "amod", "advmod", "prep",  "pobj", "det",
        "compound", "conj", "cc",  "acomp", "xcomp", "mark", "aux",
    };
    return rels;
}

// Random valid dependency sentence: a random node becomes the root and each
// remaining node attaches (in random insertion order) to a node already in
// the tree, so the result is always acyclic and connected.
inline DepSentence random_dep_sentence(std::size_t n, SplitMix64& rng,
                                       const std::string& id = "synthetic") {
    DepSentence s;
    s.id = id;
    s.tokens.resize(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::size_t> inserted;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t idx = order[k];
        Token& t = s.tokens[idx];
        t.index = idx;
        t.surface = "w" + std::to_string(idx);
        if (k == 0) {
            t.head = Token::kRoot;
            t.deprel = "root";
        } else {
            t.head = static_cast<int>(inserted[rng.next_below(inserted.size())]);
            t.deprel = common_deprels()[rng.next_below(common_deprels().size())];
        }
        inserted.push_back(idx);
    }
    return s;
}

} // namespace seqreg
