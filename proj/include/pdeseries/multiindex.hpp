#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "pdeseries/errors.hpp"

namespace pdeseries {

// Non-negative exponent tuple for k independent variables.
class MultiIndex {
public:
    explicit MultiIndex(std::vector<int> entries) : e_(std::move(entries)) {
        if (e_.empty()) throw UsageError("multi-index needs at least one variable");
        for (int v : e_)
            if (v < 0) throw UsageError("multi-index entries must be non-negative");
    }

    static MultiIndex zero(int k) {
        if (k < 1) throw UsageError("multi-index needs at least one variable");
        return MultiIndex(std::vector<int>(static_cast<std::size_t>(k), 0));
    }
    static MultiIndex unit(int k, int axis) {
        MultiIndex m = zero(k);
        m.check_axis(axis);
        m.e_[static_cast<std::size_t>(axis)] = 1;
        return m;
    }

    int size() const { return static_cast<int>(e_.size()); }
    int at(int axis) const {
        check_axis(axis);
        return e_[static_cast<std::size_t>(axis)];
    }
    int total() const { return std::accumulate(e_.begin(), e_.end(), 0); }
    const std::vector<int>& entries() const { return e_; }

    MultiIndex plus_axis(int axis) const {
        check_axis(axis);
        MultiIndex m = *this;
        ++m.e_[static_cast<std::size_t>(axis)];
        return m;
    }
    MultiIndex minus_axis(int axis) const {
        check_axis(axis);
        if (e_[static_cast<std::size_t>(axis)] == 0)
            throw UsageError("multi-index entry underflow");
        MultiIndex m = *this;
        --m.e_[static_cast<std::size_t>(axis)];
        return m;
    }
    MultiIndex plus(const MultiIndex& o) const {
        check_same_size(o);
        MultiIndex m = *this;
        for (std::size_t i = 0; i < e_.size(); ++i) m.e_[i] += o.e_[i];
        return m;
    }
    // Componentwise difference; caller must guarantee o <= *this.
    MultiIndex minus(const MultiIndex& o) const {
        check_same_size(o);
        MultiIndex m = *this;
        for (std::size_t i = 0; i < e_.size(); ++i) {
            m.e_[i] -= o.e_[i];
            if (m.e_[i] < 0) throw UsageError("multi-index entry underflow");
        }
        return m;
    }
    bool componentwise_leq(const MultiIndex& o) const {
        check_same_size(o);
        for (std::size_t i = 0; i < e_.size(); ++i)
            if (e_[i] > o.e_[i]) return false;
        return true;
    }
    // Lowest axis carrying a nonzero entry, or -1 for the zero index.
    int first_nonzero_axis() const {
        for (std::size_t i = 0; i < e_.size(); ++i)
            if (e_[i] > 0) return static_cast<int>(i);
        return -1;
    }

    bool operator==(const MultiIndex& o) const { return e_ == o.e_; }
    bool operator!=(const MultiIndex& o) const { return e_ != o.e_; }

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < e_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(e_[i]);
        }
        return s + ")";
    }

private:
    // There is deliberately no int "count" constructor: overload resolution
    // would prefer it for braced calls like MultiIndex({2}), silently turning
    // "the exponent (2)" into "two zero entries".  Use zero()/unit() or the
    // vector constructor.
    void check_axis(int axis) const {
        if (axis < 0 || axis >= size()) throw UsageError("axis out of range");
    }
    void check_same_size(const MultiIndex& o) const {
        if (o.size() != size()) throw UsageError("multi-index size mismatch");
    }
    std::vector<int> e_;
};

// Total degree first, then lexicographic.  This is the ordering used for all
// term maps, coefficient listings and evaluation loops, which makes every
// iteration over series terms deterministic.
struct GradedLexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        int ta = a.total(), tb = b.total();
        if (ta != tb) return ta < tb;
        return std::lexicographical_compare(a.entries().begin(), a.entries().end(),
                                            b.entries().begin(), b.entries().end());
    }
};

// All multi-indices with the given exact total degree, in lexicographic order.
inline std::vector<MultiIndex> multi_indices_of_total(int k, int total) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(static_cast<std::size_t>(k), 0);
    std::function<void(int, int)> rec = [&](int axis, int remaining) {
        if (axis == k - 1) {
            cur[static_cast<std::size_t>(axis)] = remaining;
            out.emplace_back(cur);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            cur[static_cast<std::size_t>(axis)] = v;
            rec(axis + 1, remaining - v);
        }
    };
    if (k >= 1 && total >= 0) rec(0, total);
    return out;
}

// All multi-indices with total degree <= max_total, graded-lex order.
inline std::vector<MultiIndex> multi_indices_up_to(int k, int max_total) {
    std::vector<MultiIndex> out;
    for (int d = 0; d <= max_total; ++d) {
        auto level = multi_indices_of_total(k, d);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

}  // namespace pdeseries
