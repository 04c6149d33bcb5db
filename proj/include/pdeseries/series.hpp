#pragma once

#include <map>
#include <string>
#include <vector>

#include "pdeseries/errors.hpp"
#include "pdeseries/multiindex.hpp"
#include "pdeseries/rational.hpp"

namespace pdeseries {

// Truncated multivariate power series with sparse canonical storage.
//
// `order` is the validity order: every coefficient of total degree <= order
// is exact (or exact-to-tolerance in the float field), and no term of higher
// degree is stored.  Arithmetic tracks validity: sums and products are valid
// to the minimum of the operands' orders, a partial derivative to one less.
// An order of -1 marks a vacuous series (nothing trustworthy); it arises only
// from differentiating a constant-order series and is safe to combine.
//
// Values are immutable once built; every operation returns a fresh series.
template <class R>
class PowerSeries {
public:
    using TermMap = std::map<MultiIndex, R, GradedLexLess>;

    PowerSeries(int num_vars, int order) : nvars_(num_vars), order_(order) {
        if (num_vars < 1) throw UsageError("series needs at least one variable");
        if (order < -1) throw UsageError("series order must be >= -1");
    }

    static PowerSeries zero(int num_vars, int order) { return PowerSeries(num_vars, order); }

    static PowerSeries constant(int num_vars, int order, const R& value) {
        PowerSeries s(num_vars, order);
        s.set_coeff(MultiIndex::zero(num_vars), value);
        return s;
    }

    static PowerSeries monomial(int num_vars, int order, const MultiIndex& m, const R& value) {
        if (m.size() != num_vars) throw UsageError("monomial index size mismatch");
        PowerSeries s(num_vars, order);
        s.set_coeff(m, value);
        return s;
    }

    int num_vars() const { return nvars_; }
    int order() const { return order_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    R coeff(const MultiIndex& m) const {
        auto it = terms_.find(m);
        if (it == terms_.end()) return FieldTraits<R>::from_int(0);
        return it->second;
    }

    // Canonicalizing write; intended for construction phases only.  Terms of
    // degree above the validity order are rejected rather than dropped.
    void set_coeff(const MultiIndex& m, const R& value) {
        if (m.size() != nvars_) throw UsageError("coefficient index size mismatch");
        if (m.total() > order_)
            throw UsageError("coefficient degree exceeds series order");
        if (FieldTraits<R>::is_zero(value, 0.0))
            terms_.erase(m);
        else
            terms_[m] = value;
    }

    PowerSeries truncated(int new_order) const {
        PowerSeries out(nvars_, std::min(order_, new_order));
        for (const auto& [m, c] : terms_)
            if (m.total() <= out.order_) out.terms_.emplace(m, c);
        return out;
    }

    PowerSeries scaled(const R& factor) const {
        PowerSeries out(nvars_, order_);
        if (FieldTraits<R>::is_zero(factor, 0.0)) return out;
        for (const auto& [m, c] : terms_) out.set_coeff(m, c * factor);
        return out;
    }

    // d/dx_axis; validity drops by one degree.
    PowerSeries derivative(int axis) const {
        if (axis < 0 || axis >= nvars_) throw UsageError("derivative axis out of range");
        PowerSeries out(nvars_, order_ >= 0 ? order_ - 1 : -1);
        for (const auto& [m, c] : terms_) {
            int e = m.at(axis);
            if (e == 0) continue;
            MultiIndex q = m.minus_axis(axis);
            if (q.total() > out.order_) continue;
            out.set_coeff(q, c * FieldTraits<R>::from_int(e));
        }
        return out;
    }

    // Multiply by factor * x^shift.  Shifting raises every term's degree, so
    // the validity order rises accordingly (capped by order_cap).
    PowerSeries shifted_scaled(const MultiIndex& shift, const R& factor, int order_cap) const {
        if (shift.size() != nvars_) throw UsageError("shift index size mismatch");
        int new_order = order_ >= 0 ? std::min(order_ + shift.total(), order_cap)
                                    : std::min(shift.total() - 1, order_cap);
        PowerSeries out(nvars_, new_order);
        if (FieldTraits<R>::is_zero(factor, 0.0)) return out;
        for (const auto& [m, c] : terms_) {
            MultiIndex q = m.plus(shift);
            if (q.total() > new_order) continue;
            out.set_coeff(q, c * factor);
        }
        return out;
    }

    // Horner-free direct evaluation in a fixed term order (graded-lex), so
    // float results are reproducible bit for bit.
    R evaluate(const std::vector<R>& point) const {
        if (static_cast<int>(point.size()) != nvars_)
            throw UsageError("evaluation point dimension mismatch");
        R acc = FieldTraits<R>::from_int(0);
        for (const auto& [m, c] : terms_) {
            R term = c;
            for (int u = 0; u < nvars_; ++u)
                for (int e = 0; e < m.at(u); ++e) term = term * point[static_cast<std::size_t>(u)];
            acc = acc + term;
        }
        return acc;
    }

    double max_abs_coeff() const {
        double best = 0.0;
        for (const auto& [m, c] : terms_)
            best = std::max(best, FieldTraits<R>::abs_double(c));
        return best;
    }

    PowerSeries operator-() const {
        PowerSeries out(nvars_, order_);
        for (const auto& [m, c] : terms_) out.terms_.emplace(m, -c);
        return out;
    }

    friend PowerSeries operator+(const PowerSeries& a, const PowerSeries& b) {
        check_compatible(a, b);
        PowerSeries out(a.nvars_, std::min(a.order_, b.order_));
        for (const auto& [m, c] : a.terms_)
            if (m.total() <= out.order_) out.terms_.emplace(m, c);
        for (const auto& [m, c] : b.terms_) {
            if (m.total() > out.order_) continue;
            auto it = out.terms_.find(m);
            if (it == out.terms_.end()) {
                out.terms_.emplace(m, c);
            } else {
                it->second = it->second + c;
                if (FieldTraits<R>::is_zero(it->second, 0.0)) out.terms_.erase(it);
            }
        }
        return out;
    }

    friend PowerSeries operator-(const PowerSeries& a, const PowerSeries& b) { return a + (-b); }

    // Cauchy product truncated to the weaker operand's validity order.
    friend PowerSeries operator*(const PowerSeries& a, const PowerSeries& b) {
        check_compatible(a, b);
        PowerSeries out(a.nvars_, std::min(a.order_, b.order_));
        if (out.order_ < 0) return out;
        for (const auto& [ma, ca] : a.terms_) {
            int da = ma.total();
            if (da > out.order_) break;  // graded order: all later terms are higher degree
            for (const auto& [mb, cb] : b.terms_) {
                if (da + mb.total() > out.order_) break;
                MultiIndex m = ma.plus(mb);
                R add = ca * cb;
                auto it = out.terms_.find(m);
                if (it == out.terms_.end()) {
                    if (!FieldTraits<R>::is_zero(add, 0.0)) out.terms_.emplace(m, add);
                } else {
                    it->second = it->second + add;
                    if (FieldTraits<R>::is_zero(it->second, 0.0)) out.terms_.erase(it);
                }
            }
        }
        return out;
    }

    bool operator==(const PowerSeries& o) const {
        return nvars_ == o.nvars_ && order_ == o.order_ && terms_ == o.terms_;
    }

    std::string str(const std::string& var_prefix = "x") const {
        if (terms_.empty()) return "0";
        std::string s;
        for (const auto& [m, c] : terms_) {
            std::string cs = FieldTraits<R>::str(c);
            bool neg = !cs.empty() && cs[0] == '-';
            if (s.empty())
                s += neg ? "-" : "";
            else
                s += neg ? " - " : " + ";
            if (neg) cs = cs.substr(1);
            std::string mono;
            for (int u = 0; u < nvars_; ++u) {
                int e = m.at(u);
                if (e == 0) continue;
                if (!mono.empty()) mono += "*";
                mono += var_prefix + std::to_string(u + 1);
                if (e > 1) mono += "^" + std::to_string(e);
            }
            if (mono.empty())
                s += cs;
            else if (cs == "1")
                s += mono;
            else
                s += cs + "*" + mono;
        }
        return s;
    }

private:
    static void check_compatible(const PowerSeries& a, const PowerSeries& b) {
        if (a.nvars_ != b.nvars_) throw UsageError("series variable-count mismatch");
    }

    int nvars_;
    int order_;
    TermMap terms_;
};

// Multiplicative inverse of a series with nonzero constant term, exact to the
// operand's validity order.  Coefficients are produced degree by degree:
// inv[0] = 1/a[0], and for m != 0,
//   inv[m] = -(1/a[0]) * sum over 0 < q <= m of a[q] * inv[m - q].
template <class R>
PowerSeries<R> reciprocal(const PowerSeries<R>& a) {
    R a0 = a.coeff(MultiIndex::zero(a.num_vars()));
    if (FieldTraits<R>::is_zero(a0, 0.0))
        throw UsageError("reciprocal of a series with zero constant term");
    if (a.order() < 0) throw UsageError("reciprocal of a vacuous series");
    R inv0 = FieldTraits<R>::div(FieldTraits<R>::from_int(1), a0);
    PowerSeries<R> out(a.num_vars(), a.order());
    out.set_coeff(MultiIndex::zero(a.num_vars()), inv0);
    for (int d = 1; d <= a.order(); ++d) {
        for (const MultiIndex& m : multi_indices_of_total(a.num_vars(), d)) {
            R acc = FieldTraits<R>::from_int(0);
            for (const auto& [q, aq] : a.terms()) {
                if (q.total() == 0) continue;
                if (q.total() > d) break;
                if (!q.componentwise_leq(m)) continue;
                acc = acc + aq * out.coeff(m.minus(q));
            }
            if (!FieldTraits<R>::is_zero(acc, 0.0)) out.set_coeff(m, -(inv0 * acc));
        }
    }
    return out;
}

// Integer power of a series; negative exponents go through reciprocal().
template <class R>
PowerSeries<R> pow_int(const PowerSeries<R>& base, long e) {
    if (e < 0) return pow_int(reciprocal(base), -e);
    PowerSeries<R> acc =
        PowerSeries<R>::constant(base.num_vars(), base.order(), FieldTraits<R>::from_int(1));
    for (long i = 0; i < e; ++i) acc = acc * base;
    return acc;
}

// Equality of every coefficient of total degree <= ord (float: within tol).
template <class R>
bool series_equal_to_order(const PowerSeries<R>& a, const PowerSeries<R>& b, int ord,
                           double tol = 0.0) {
    PowerSeries<R> d = a.truncated(ord) - b.truncated(ord);
    for (const auto& [m, c] : d.terms())
        if (!FieldTraits<R>::is_zero(c, tol)) return false;
    return true;
}

}  // namespace pdeseries
