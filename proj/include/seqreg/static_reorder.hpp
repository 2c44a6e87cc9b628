#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <vector>

#include "seqreg/corpus.hpp"
#include "seqreg/error.hpp"
#include "seqreg/matrix.hpp"
#include "seqreg/rules.hpp"

namespace seqreg {

// order[k] = original index of the token placed at new position k.
struct Permutation {
    std::vector<std::size_t> order;

    std::size_t size() const { return order.size(); }

    bool is_bijection() const {
        std::vector<bool> seen(order.size(), false);
        for (std::size_t v : order) {
            if (v >= order.size() || seen[v]) return false;
            seen[v] = true;
        }
        return true;
    }

    // inverse().order[original index] = new position.
    Permutation inverse() const {
        Permutation inv;
        inv.order.resize(order.size());
        for (std::size_t k = 0; k < order.size(); ++k) inv.order[order[k]] = k;
        return inv;
    }

    bool operator==(const Permutation& o) const { return order == o.order; }
};

// Rule-based static optimization: BFS from the root, children of each
// dequeued node sorted ascending by the table rank of their deprel, ties
// broken by original index. The visit order is the permutation.
inline Permutation static_order(const DepSentence& s, const RuleTable& rules) {
    const std::size_t n = s.size();
    std::vector<std::vector<std::size_t>> children(n);
    std::size_t root = n;
    for (const Token& t : s.tokens) {
        if (t.head == Token::kRoot)
            root = t.index;
        else
            children[static_cast<std::size_t>(t.head)].push_back(t.index);
    }
    if (root == n) raise(ErrorCategory::Structure, "sentence '" + s.id + "' has no root");

    Permutation perm;
    perm.order.reserve(n);
    std::deque<std::size_t> queue{root};
    while (!queue.empty()) {
        const std::size_t node = queue.front();
        queue.pop_front();
        perm.order.push_back(node);
        auto kids = children[node];
        std::stable_sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) {
            return rules.rank_of(s.tokens[a].deprel) < rules.rank_of(s.tokens[b].deprel);
        });
        for (std::size_t child : kids) queue.push_back(child);
    }
    if (perm.order.size() != n)
        raise(ErrorCategory::Structure,
              "sentence '" + s.id + "': tree is not connected");
    return perm;
}

// Row k of the output is row order[k] of the input.
inline Matrix apply_permutation(const Matrix& m, const Permutation& p) {
    if (m.rows() != p.size())
        raise(ErrorCategory::Dimension, "apply_permutation: matrix rows != permutation length");
    Matrix out(m.rows(), m.cols());
    for (std::size_t k = 0; k < p.size(); ++k)
        for (std::size_t c = 0; c < m.cols(); ++c) out(k, c) = m(p.order[k], c);
    return out;
}

} // namespace seqreg
