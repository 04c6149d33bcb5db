#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pdeseries/linear.hpp"
#include "pdeseries/series.hpp"

namespace pdeseries {

// Integer exponent tuple over the n unknowns; negative entries are allowed
// (Laurent monomials).  Ordered lexicographically.
class ExponentVector {
public:
    explicit ExponentVector(std::vector<int> entries) : e_(std::move(entries)) {
        if (e_.empty()) throw UsageError("exponent vector needs at least one unknown");
    }

    static ExponentVector zero(int n) {
        if (n < 1) throw UsageError("exponent vector needs at least one unknown");
        return ExponentVector(std::vector<int>(static_cast<std::size_t>(n), 0));
    }
    static ExponentVector unit(int n, int s) {
        ExponentVector v = zero(n);
        v.check_slot(s);
        v.e_[static_cast<std::size_t>(s)] = 1;
        return v;
    }

    int size() const { return static_cast<int>(e_.size()); }
    int at(int s) const {
        check_slot(s);
        return e_[static_cast<std::size_t>(s)];
    }
    const std::vector<int>& entries() const { return e_; }
    bool is_unit() const {
        int ones = 0;
        for (int v : e_) {
            if (v == 1) ++ones;
            else if (v != 0) return false;
        }
        return ones == 1;
    }
    bool has_negative() const {
        for (int v : e_)
            if (v < 0) return true;
        return false;
    }

    ExponentVector plus(const ExponentVector& o) const {
        check_same(o);
        ExponentVector v = *this;
        for (std::size_t i = 0; i < e_.size(); ++i) v.e_[i] += o.e_[i];
        return v;
    }
    ExponentVector minus(const ExponentVector& o) const {
        check_same(o);
        ExponentVector v = *this;
        for (std::size_t i = 0; i < e_.size(); ++i) v.e_[i] -= o.e_[i];
        return v;
    }
    ExponentVector plus_unit(int s) const {
        check_slot(s);
        ExponentVector v = *this;
        ++v.e_[static_cast<std::size_t>(s)];
        return v;
    }
    ExponentVector minus_unit(int s) const {
        check_slot(s);
        ExponentVector v = *this;
        --v.e_[static_cast<std::size_t>(s)];
        return v;
    }

    bool operator==(const ExponentVector& o) const { return e_ == o.e_; }
    bool operator!=(const ExponentVector& o) const { return e_ != o.e_; }
    bool operator<(const ExponentVector& o) const { return e_ < o.e_; }

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < e_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(e_[i]);
        }
        return s + ")";
    }

private:
    // No int "count" constructor on purpose; see the MultiIndex note.
    void check_slot(int s) const {
        if (s < 0 || s >= size()) throw UsageError("exponent slot out of range");
    }
    void check_same(const ExponentVector& o) const {
        if (o.size() != size()) throw UsageError("exponent vector size mismatch");
    }
    std::vector<int> e_;
};

// A finite box of exponent vectors plus the number of recursion levels the
// box must survive without any reachable index escaping.
struct LaurentWindow {
    std::vector<int> lo, hi;
    int closure_depth = 0;  // 0 means: derive from the operation's own depth

    int size() const { return static_cast<int>(lo.size()); }
    bool contains(const ExponentVector& v) const {
        if (v.size() != size()) throw UsageError("window dimension mismatch");
        for (int i = 0; i < size(); ++i)
            if (v.at(i) < lo[static_cast<std::size_t>(i)] ||
                v.at(i) > hi[static_cast<std::size_t>(i)])
                return false;
        return true;
    }
    void validate(int n) const {
        if (size() != n || static_cast<int>(hi.size()) != n)
            throw UsageError("window dimension mismatch");
        for (int i = 0; i < n; ++i) {
            if (lo[static_cast<std::size_t>(i)] > hi[static_cast<std::size_t>(i)])
                throw UsageError("window has lo > hi");
            if (lo[static_cast<std::size_t>(i)] > 0 || hi[static_cast<std::size_t>(i)] < 1)
                throw UsageError("window must contain all unit vectors and the zero vector");
        }
    }
};

// An index the recursion needs fell outside the declared window; the user
// must widen the window (refusal is preferred over silent truncation).
class WindowEscapeError : public std::runtime_error {
public:
    WindowEscapeError(const ExponentVector& index, const std::string& msg)
        : std::runtime_error(msg), escaping(index.entries()) {}
    std::vector<int> escaping;
};

// First-order system with polynomial/Laurent right-hand sides:
//
//   d y_r / d x_u + sum_{alpha in support} f[r][alpha][u](x) * y^alpha = 0,
//
// where y^alpha = prod_s y_s^{alpha_s}.  Coefficients are series in x valid
// to the common order N.  The support is the set of exponent vectors that
// appear; linear systems are the special case support = {unit vectors}.
template <class R>
class NonlinearSystem {
public:
    NonlinearSystem(int n, int k, int order) : n_(n), k_(k), order_(order) {
        if (n < 1 || k < 1) throw UsageError("system needs n >= 1 unknowns and k >= 1 variables");
        if (order < 1) throw UsageError("system needs order >= 1");
    }

    int n() const { return n_; }
    int k() const { return k_; }
    int order() const { return order_; }
    const std::vector<ExponentVector>& support() const { return support_; }

    void set_coeff(int r, const ExponentVector& alpha, int u, const PowerSeries<R>& series) {
        if (r < 0 || r >= n_ || u < 0 || u >= k_)
            throw UsageError("system coefficient index out of range");
        if (alpha.size() != n_) throw UsageError("support vector size mismatch");
        if (series.num_vars() != k_) throw UsageError("coefficient variable-count mismatch");
        if (series.order() < order_)
            throw InsufficientOrderError("coefficient series order below system order");
        f_.insert_or_assign(Key{r, alpha, u}, series.truncated(order_));
        if (std::find(support_.begin(), support_.end(), alpha) == support_.end()) {
            support_.push_back(alpha);
            std::sort(support_.begin(), support_.end());
        }
        scale_cached_ = false;
    }

    const PowerSeries<R>& coeff(int r, const ExponentVector& alpha, int u) const {
        auto it = f_.find(Key{r, alpha, u});
        if (it == f_.end()) {
            static thread_local std::map<std::pair<int, int>, PowerSeries<R>> zeros;
            auto [zit, inserted] = zeros.try_emplace(std::make_pair(k_, order_),
                                                     PowerSeries<R>::zero(k_, order_));
            return zit->second;
        }
        return it->second;
    }

    bool has_negative_support() const {
        for (const auto& a : support_)
            if (a.has_negative()) return true;
        return false;
    }

    // Largest |exponent| across the support, used for window auto-sizing.
    int max_support_component() const {
        int m = 0;
        for (const auto& a : support_)
            for (int v : a.entries()) m = std::max(m, std::abs(v));
        return m;
    }

    double coeff_scale() const {
        if (!scale_cached_) {
            double best = 0.0;
            for (const auto& [key, s] : f_) best = std::max(best, s.max_abs_coeff());
            scale_ = best;
            scale_cached_ = true;
        }
        return scale_;
    }

private:
    struct Key {
        int r;
        ExponentVector alpha;
        int u;
        bool operator<(const Key& o) const {
            if (r != o.r) return r < o.r;
            if (alpha != o.alpha) return alpha < o.alpha;
            return u < o.u;
        }
    };
    int n_, k_, order_;
    std::vector<ExponentVector> support_;
    std::map<Key, PowerSeries<R>> f_;
    mutable double scale_ = 0.0;
    mutable bool scale_cached_ = false;
};

// Default window for non-negative (polynomial) supports: [0, D*(order+1)]
// per component with D the largest support exponent; one reachability step
// can raise a component by at most D, so `order` recursion levels from a
// unit vector stay inside.  True Laurent supports have no safe default and
// must come with an explicit window.
template <class R>
LaurentWindow auto_window(const NonlinearSystem<R>& sys, int order) {
    if (sys.has_negative_support())
        throw UsageError(
            "no automatic window for supports with negative exponents; pass one explicitly");
    int d = std::max(1, sys.max_support_component());
    LaurentWindow w;
    w.lo.assign(static_cast<std::size_t>(sys.n()), 0);
    w.hi.assign(static_cast<std::size_t>(sys.n()), d * (order + 1));
    w.closure_depth = order;
    return w;
}

// Coefficient of the lifted (monomial-indexed) linear system.  For row alpha
// and column beta:
//
//   L[alpha][beta][u] = sum_s alpha_s * f[s][beta - alpha + unit(s)][u],
//
// the chain-rule coupling of d(y^alpha)/dx_u to the monomials y^beta.  This
// direct formula is exact for any pair of indices; finite supports make the
// sum finite.
template <class R>
PowerSeries<R> lift_coefficient(const NonlinearSystem<R>& sys, const ExponentVector& alpha,
                                const ExponentVector& beta, int u) {
    PowerSeries<R> acc = PowerSeries<R>::zero(sys.k(), sys.order());
    for (int s = 0; s < sys.n(); ++s) {
        int as = alpha.at(s);
        if (as == 0) continue;
        const PowerSeries<R>& f = sys.coeff(s, beta.minus(alpha).plus_unit(s), u);
        if (f.is_zero()) continue;
        acc = acc + f.scaled(FieldTraits<R>::from_int(as));
    }
    return acc;
}

// Columns beta with a possibly nonzero lifted coefficient in row alpha:
// beta = alpha - unit(s) + sigma for each s with alpha_s != 0 and sigma in
// the support.  Sorted and unique, so iteration is deterministic.
template <class R>
std::vector<ExponentVector> shift_targets(const NonlinearSystem<R>& sys,
                                          const ExponentVector& alpha) {
    std::set<ExponentVector> out;
    for (int s = 0; s < sys.n(); ++s) {
        if (alpha.at(s) == 0) continue;
        for (const auto& sigma : sys.support()) out.insert(alpha.minus_unit(s).plus(sigma));
    }
    return std::vector<ExponentVector>(out.begin(), out.end());
}

// Compatibility tensor entry of the lifted system, valid to order N-1:
//
//   K[alpha][beta][u][v] = d L[alpha][beta][v]/d x_u - d L[alpha][beta][u]/d x_v
//       + sum_t L[t][beta][v] L[alpha][t][u] - sum_t L[t][beta][u] L[alpha][t][v],
//
// with t running over the finitely many columns reachable from alpha.
template <class R>
PowerSeries<R> lifted_curvature_entry(const NonlinearSystem<R>& sys, const ExponentVector& alpha,
                                      const ExponentVector& beta, int u, int v) {
    PowerSeries<R> acc = lift_coefficient(sys, alpha, beta, v).derivative(u) -
                         lift_coefficient(sys, alpha, beta, u).derivative(v);
    for (const auto& t : shift_targets(sys, alpha)) {
        acc = acc + lift_coefficient(sys, t, beta, v) * lift_coefficient(sys, alpha, t, u) -
              lift_coefficient(sys, t, beta, u) * lift_coefficient(sys, alpha, t, v);
    }
    return acc;
}

// Monomial indices reachable from the seed rows within `depth` coupling
// steps, in breadth-first order.  Any reachable index outside the window is
// an escape and aborts the build.
struct LiftedIndexSet {
    std::vector<ExponentVector> indices;  // BFS order, deterministic
    std::map<ExponentVector, int> depth;  // BFS level of each index
    bool saturated = false;               // no new indices appeared before depth ran out
};

template <class R>
LiftedIndexSet lifted_index_set(const NonlinearSystem<R>& sys, const LaurentWindow& window,
                                const std::vector<ExponentVector>& seeds, int depth) {
    window.validate(sys.n());
    LiftedIndexSet out;
    std::vector<ExponentVector> frontier;
    for (const auto& s : seeds) {
        if (!window.contains(s))
            throw WindowEscapeError(s, "seed index " + s.str() + " lies outside the window");
        if (out.depth.emplace(s, 0).second) {
            out.indices.push_back(s);
            frontier.push_back(s);
        }
    }
    for (int level = 1; level <= depth; ++level) {
        std::vector<ExponentVector> next;
        for (const auto& a : frontier)
            for (const auto& t : shift_targets(sys, a)) {
                if (!window.contains(t))
                    throw WindowEscapeError(
                        t, "index " + t.str() + " reachable within " + std::to_string(level) +
                               " steps escapes the window; widen it");
                if (out.depth.emplace(t, level).second) {
                    out.indices.push_back(t);
                    next.push_back(t);
                }
            }
        frontier = std::move(next);
        if (frontier.empty()) {
            out.saturated = true;
            break;
        }
    }
    return out;
}

template <class R>
std::vector<ExponentVector> unit_rows(const NonlinearSystem<R>& sys) {
    std::vector<ExponentVector> units;
    for (int r = 0; r < sys.n(); ++r) units.push_back(ExponentVector::unit(sys.n(), r));
    return units;
}

// The lifted system materialized over a window: one linear unknown per
// reachable monomial index, rows carrying their sparse coefficient columns.
// When the index set saturates (closes under coupling), `to_linear_system`
// produces an ordinary dense system over the same data.
template <class R>
class LiftedLinearSystem {
public:
    LiftedLinearSystem(const NonlinearSystem<R>& sys, const LaurentWindow& window)
        : k_(sys.k()), order_(sys.order()) {
        int depth = window.closure_depth > 0 ? window.closure_depth : sys.order();
        set_ = lifted_index_set(sys, window, unit_rows(sys), depth);
        for (const auto& alpha : set_.indices) {
            RowMap row;
            for (const auto& beta : shift_targets(sys, alpha)) {
                std::vector<PowerSeries<R>> per_axis;
                bool any = false;
                for (int u = 0; u < k_; ++u) {
                    per_axis.push_back(lift_coefficient(sys, alpha, beta, u));
                    any = any || !per_axis.back().is_zero();
                }
                if (any) row.emplace(beta, std::move(per_axis));
            }
            rows_.emplace(alpha, std::move(row));
        }
    }

    const LiftedIndexSet& index_set() const { return set_; }
    bool closed() const {
        if (!set_.saturated) return false;
        for (const auto& [alpha, row] : rows_)
            for (const auto& [beta, per_axis] : row)
                if (!set_.depth.count(beta)) return false;
        return true;
    }

    // Lifted coefficient for a row in the index set (zero when absent).
    PowerSeries<R> coeff(const ExponentVector& alpha, const ExponentVector& beta, int u) const {
        auto it = rows_.find(alpha);
        if (it == rows_.end()) throw UsageError("row " + alpha.str() + " not in the lifted set");
        auto jt = it->second.find(beta);
        if (jt == it->second.end()) return PowerSeries<R>::zero(k_, order_);
        return jt->second[static_cast<std::size_t>(u)];
    }

    // Dense view; requires a closed index set so no coefficient is dropped.
    LinearSystem<R> to_linear_system() const {
        if (!closed())
            throw UsageError("lifted index set is not closed; no faithful dense view exists");
        LinearSystem<R> lin(static_cast<int>(set_.indices.size()), k_, order_);
        std::map<ExponentVector, int> ordinal;
        for (std::size_t i = 0; i < set_.indices.size(); ++i)
            ordinal[set_.indices[i]] = static_cast<int>(i);
        for (const auto& [alpha, row] : rows_)
            for (const auto& [beta, per_axis] : row)
                for (int u = 0; u < k_; ++u)
                    if (!per_axis[static_cast<std::size_t>(u)].is_zero())
                        lin.set_coeff(ordinal.at(alpha), ordinal.at(beta), u,
                                      per_axis[static_cast<std::size_t>(u)]);
        return lin;
    }

private:
    using RowMap = std::map<ExponentVector, std::vector<PowerSeries<R>>>;
    int k_, order_;
    LiftedIndexSet set_;
    std::map<ExponentVector, RowMap> rows_;
};

template <class R>
LiftedLinearSystem<R> lift(const NonlinearSystem<R>& sys, const LaurentWindow& window) {
    return LiftedLinearSystem<R>(sys, window);
}

// Nonlinear analogue of the compatibility witness; `alpha` is always a unit
// row.  Indices u, v are 1-based for reporting.
struct LiftedCurvatureWitness {
    std::vector<int> alpha, beta;
    int u = 0, v = 0;
    std::vector<int> position;
    std::string value;
    std::string str() const {
        auto vec = [](const std::vector<int>& e) {
            std::string s = "(";
            for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
            return s + ")";
        };
        return "lifted entry (alpha=" + vec(alpha) + ", beta=" + vec(beta) +
               ", u=" + std::to_string(u) + ", v=" + std::to_string(v) + ") at x^" +
               vec(position) + " has coefficient " + value;
    }
};

struct NonlinearIntegrabilityDecision {
    bool integrable = false;
    int checked_order = 0;
    std::optional<LiftedCurvatureWitness> witness;
    std::string verdict() const {
        return integrable ? "integrable-to-order-" + std::to_string(checked_order) : "violated";
    }
};

// Compatibility of the nonlinear system.  Only the unit rows need checking:
// every other row's tensor entry is a finite combination of unit-row entries
// shifted by the remaining exponents, so unit-row vanishing is sufficient.
template <class R>
NonlinearIntegrabilityDecision is_integrable_nonlinear(const NonlinearSystem<R>& sys,
                                                       const LaurentWindow& window,
                                                       double tol_base = 1e-10) {
    window.validate(sys.n());
    NonlinearIntegrabilityDecision d;
    d.checked_order = sys.order() - 1;
    double tol = FieldTraits<R>::exact ? 0.0 : scaled_tolerance(tol_base, sys.coeff_scale());
    for (int r = 0; r < sys.n(); ++r) {
        ExponentVector alpha = ExponentVector::unit(sys.n(), r);
        // Candidate columns: reachable in one step (derivative terms) or two
        // (product terms); everything else is identically zero.
        std::set<ExponentVector> betas;
        for (const auto& t : shift_targets(sys, alpha)) {
            betas.insert(t);
            for (const auto& b : shift_targets(sys, t)) betas.insert(b);
        }
        for (const auto& beta : betas)
            for (int u = 0; u < sys.k(); ++u)
                for (int v = u + 1; v < sys.k(); ++v) {
                    PowerSeries<R> e = lifted_curvature_entry(sys, alpha, beta, u, v);
                    for (const auto& [m, c] : e.terms()) {
                        if (FieldTraits<R>::is_zero(c, tol)) continue;
                        d.integrable = false;
                        d.witness =
                            LiftedCurvatureWitness{alpha.entries(), beta.entries(), u + 1, v + 1,
                                                   m.entries(), FieldTraits<R>::str(c)};
                        return d;
                    }
                }
    }
    d.integrable = true;
    return d;
}

// Structural identities of the lift, verified on sampled index tuples.  The
// lifted coefficients are additive in the row index in the precise sense
//
//   L[a+b][c][u] = L[a][c-b][u] + L[b][c-a][u]
//
// (and the same shape for the compatibility tensor), and every row is a
// combination of unit rows:  L[a][b][u] = sum_s a_s * L[{s}][b-a+{s}][u].
// Violations indicate an implementation bug; the identities are exact.
struct LiftIdentityFailure {
    std::string identity;
    std::string indices;
    std::string detail;
};

struct LiftIdentityReport {
    int samples = 0;
    int checked = 0;
    std::vector<LiftIdentityFailure> failures;
    bool pass() const { return failures.empty(); }
};

template <class R>
LiftIdentityReport check_lift_identities(const NonlinearSystem<R>& sys,
                                         const LaurentWindow& window, int samples,
                                         unsigned long long seed, double tol_base = 1e-10) {
    window.validate(sys.n());
    LiftIdentityReport rep;
    rep.samples = samples;
    std::mt19937_64 rng(seed);
    double tol = FieldTraits<R>::exact ? 0.0 : scaled_tolerance(tol_base, sys.coeff_scale());
    auto draw = [&]() {
        std::vector<int> e(static_cast<std::size_t>(sys.n()));
        for (int i = 0; i < sys.n(); ++i) {
            std::uniform_int_distribution<int> dist(window.lo[static_cast<std::size_t>(i)],
                                                    window.hi[static_cast<std::size_t>(i)]);
            e[static_cast<std::size_t>(i)] = dist(rng);
        }
        return ExponentVector(e);
    };
    auto mismatch = [&](const PowerSeries<R>& a, const PowerSeries<R>& b) {
        return !series_equal_to_order(a, b, std::min(a.order(), b.order()), tol);
    };
    for (int i = 0; i < samples; ++i) {
        ExponentVector a = draw(), b = draw(), c = draw();
        std::string idx = "a=" + a.str() + " b=" + b.str() + " c=" + c.str();
        for (int u = 0; u < sys.k(); ++u) {
            ++rep.checked;
            PowerSeries<R> lhs = lift_coefficient(sys, a.plus(b), c, u);
            PowerSeries<R> rhs = lift_coefficient(sys, a, c.minus(b), u) +
                                 lift_coefficient(sys, b, c.minus(a), u);
            if (mismatch(lhs, rhs))
                rep.failures.push_back({"row-additivity (coefficients)", idx,
                                        "axis u=" + std::to_string(u + 1)});
            ++rep.checked;
            PowerSeries<R> unit_sum = PowerSeries<R>::zero(sys.k(), sys.order());
            for (int s = 0; s < sys.n(); ++s) {
                if (a.at(s) == 0) continue;
                unit_sum = unit_sum +
                           lift_coefficient(sys, ExponentVector::unit(sys.n(), s),
                                            b.minus(a).plus_unit(s), u)
                               .scaled(FieldTraits<R>::from_int(a.at(s)));
            }
            if (mismatch(lift_coefficient(sys, a, b, u), unit_sum))
                rep.failures.push_back({"unit-row decomposition (coefficients)", idx,
                                        "axis u=" + std::to_string(u + 1)});
            for (int v = u + 1; v < sys.k(); ++v) {
                ++rep.checked;
                PowerSeries<R> klhs = lifted_curvature_entry(sys, a.plus(b), c, u, v);
                PowerSeries<R> krhs = lifted_curvature_entry(sys, a, c.minus(b), u, v) +
                                      lifted_curvature_entry(sys, b, c.minus(a), u, v);
                if (mismatch(klhs, krhs))
                    rep.failures.push_back({"row-additivity (compatibility tensor)", idx,
                                            "axes u=" + std::to_string(u + 1) +
                                                " v=" + std::to_string(v + 1)});
                ++rep.checked;
                PowerSeries<R> kunit = PowerSeries<R>::zero(sys.k(), sys.order() - 1);
                for (int s = 0; s < sys.n(); ++s) {
                    if (a.at(s) == 0) continue;
                    kunit = kunit +
                            lifted_curvature_entry(sys, ExponentVector::unit(sys.n(), s),
                                                   b.minus(a).plus_unit(s), u, v)
                                .scaled(FieldTraits<R>::from_int(a.at(s)));
                }
                if (mismatch(lifted_curvature_entry(sys, a, b, u, v), kunit))
                    rep.failures.push_back({"unit-row decomposition (compatibility tensor)", idx,
                                            "axes u=" + std::to_string(u + 1) +
                                                " v=" + std::to_string(v + 1)});
            }
        }
    }
    return rep;
}

// Transport table of the lifted system, kept row-sparse.  Stored level by
// level exactly like the dense table:  entry w is reached by incrementing
// its lowest-index nonzero axis last, and
//
//   P<w+e_u>[alpha][beta] = d P<w>[alpha][beta]/d x_u
//                           + sum_t L[alpha][t][u] * P<w>[t][beta].
//
// Row alpha at level ell requires rows reachable from alpha in one step at
// level ell-1, so the stored row set shrinks with the level: rows reachable
// from the seeds within (max_total - ell) steps are kept.  Nothing outside
// the window is ever read, which keeps every stored coefficient exact.
template <class R>
class LiftedPropagatorTable {
public:
    using Row = std::map<ExponentVector, PowerSeries<R>>;
    using Level = std::map<ExponentVector, Row>;

    LiftedPropagatorTable(const NonlinearSystem<R>& sys, const LaurentWindow& window,
                          int max_total, std::vector<ExponentVector> seeds)
        : k_(sys.k()), series_order_(sys.order()), max_total_(max_total) {
        if (max_total < 0) throw UsageError("lifted table needs max_total >= 0");
        if (max_total > sys.order())
            throw InsufficientOrderError("lifted table depth exceeds system order");
        int depth = std::max(max_total, window.closure_depth);
        set_ = lifted_index_set(sys, window, seeds, depth);

        // Cache the sparse coupling rows once.
        std::map<ExponentVector, std::vector<std::vector<std::pair<ExponentVector, PowerSeries<R>>>>>
            coupling;
        for (const auto& alpha : set_.indices) {
            auto& per_axis = coupling[alpha];
            per_axis.resize(static_cast<std::size_t>(k_));
            for (const auto& t : shift_targets(sys, alpha))
                for (int u = 0; u < k_; ++u) {
                    PowerSeries<R> c = lift_coefficient(sys, alpha, t, u);
                    if (!c.is_zero())
                        per_axis[static_cast<std::size_t>(u)].emplace_back(t, std::move(c));
                }
        }

        auto rows_at = [&](int level) {
            std::vector<ExponentVector> rows;
            for (const auto& alpha : set_.indices)
                if (set_.depth.at(alpha) <= max_total_ - level) rows.push_back(alpha);
            return rows;
        };

        Level base;
        for (const auto& alpha : rows_at(0)) {
            Row row;
            row.emplace(alpha, PowerSeries<R>::constant(k_, series_order_,
                                                        FieldTraits<R>::from_int(1)));
            base.emplace(alpha, std::move(row));
        }
        levels_.emplace(MultiIndex::zero(k_), std::move(base));

        for (int level = 1; level <= max_total_; ++level) {
            auto rows = rows_at(level);
            for (const MultiIndex& w : multi_indices_of_total(k_, level)) {
                int axis = w.first_nonzero_axis();
                const Level& prev = levels_.at(w.minus_axis(axis));
                Level cur;
                for (const auto& alpha : rows) {
                    Row out;
                    for (const auto& [beta, series] : prev.at(alpha))
                        accumulate(out, beta, series.derivative(axis));
                    for (const auto& [t, c] : coupling.at(alpha)[static_cast<std::size_t>(axis)])
                        for (const auto& [beta, series] : prev.at(t))
                            accumulate(out, beta, c * series);
                    // A column absent from the previous level is only known to
                    // vanish up to that level's validity, so every entry here
                    // is valid to N - level and no further.
                    for (auto& [beta, series] : out)
                        series = series.truncated(series_order_ - level);
                    prune(out);
                    cur.emplace(alpha, std::move(out));
                }
                levels_.emplace(w, std::move(cur));
            }
        }
    }

    int max_total() const { return max_total_; }
    int valid_order(const MultiIndex& w) const { return series_order_ - w.total(); }
    const LiftedIndexSet& index_set() const { return set_; }

    // Sparse row of entry w; throws if the row was not kept at this level.
    const Row& row(const MultiIndex& w, const ExponentVector& alpha) const {
        auto lit = levels_.find(w);
        if (lit == levels_.end())
            throw UsageError("lifted table entry " + w.str() + " not computed");
        auto rit = lit->second.find(alpha);
        if (rit == lit->second.end())
            throw UsageError("lifted table row " + alpha.str() + " not kept at level " + w.str());
        return rit->second;
    }

    PowerSeries<R> entry(const MultiIndex& w, const ExponentVector& alpha,
                         const ExponentVector& beta) const {
        const Row& r = row(w, alpha);
        auto it = r.find(beta);
        if (it == r.end()) return PowerSeries<R>::zero(k_, valid_order(w));
        return it->second;
    }

private:
    static void accumulate(Row& row, const ExponentVector& beta, const PowerSeries<R>& add) {
        auto it = row.find(beta);
        if (it == row.end())
            row.emplace(beta, add);
        else
            it->second = it->second + add;
    }
    static void prune(Row& row) {
        for (auto it = row.begin(); it != row.end();)
            it = it->second.is_zero() ? row.erase(it) : std::next(it);
    }

    int k_, series_order_, max_total_;
    LiftedIndexSet set_;
    std::map<MultiIndex, Level, GradedLexLess> levels_;
};

template <class R>
LiftedPropagatorTable<R> lifted_propagators(const NonlinearSystem<R>& sys,
                                            const LaurentWindow& window, int max_total) {
    return LiftedPropagatorTable<R>(sys, window, max_total, unit_rows(sys));
}

// Series solution with y(0) = C, kept symbolic in C: the stored object maps
// (x multi-index m, exponent vector beta) to the coefficient of x^m * C^beta,
//
//   y_r(x) = sum_w prod_u (-x_u)^{w_u}/w_u! * sum_beta P<w>[{r}][beta] C^beta,
//
// so a single solve serves any initial value of the same shape; numeric
// evaluation substitutes C last.
template <class R>
struct NonlinearSolution {
    int n = 0, k = 0, order = 0;
    std::vector<R> C;
    std::vector<std::map<MultiIndex, std::map<ExponentVector, R>, GradedLexLess>> sym;

    R coefficient(int r, const MultiIndex& m, const ExponentVector& beta) const {
        const auto& per_m = sym.at(static_cast<std::size_t>(r));
        auto it = per_m.find(m);
        if (it == per_m.end()) return FieldTraits<R>::from_int(0);
        auto jt = it->second.find(beta);
        if (jt == it->second.end()) return FieldTraits<R>::from_int(0);
        return jt->second;
    }

    R c_power(const ExponentVector& beta) const {
        R acc = FieldTraits<R>::from_int(1);
        for (int s = 0; s < n; ++s)
            acc = acc * field_pow(C[static_cast<std::size_t>(s)], beta.at(s));
        return acc;
    }

    // Taylor series of unknown r with the stored C substituted.
    PowerSeries<R> series_with_C(int r) const {
        PowerSeries<R> out(k, order);
        for (const auto& [m, per_beta] : sym.at(static_cast<std::size_t>(r))) {
            R acc = FieldTraits<R>::from_int(0);
            for (const auto& [beta, c] : per_beta) acc = acc + c * c_power(beta);
            if (!FieldTraits<R>::is_zero(acc, 0.0)) out.set_coeff(m, acc);
        }
        return out;
    }

    std::vector<R> evaluate(const std::vector<R>& x) const {
        std::vector<R> out;
        for (int r = 0; r < n; ++r) out.push_back(series_with_C(r).evaluate(x));
        return out;
    }
};

template <class R>
NonlinearSolution<R> solve_nonlinear_with_table(const NonlinearSystem<R>& sys,
                                                const LiftedPropagatorTable<R>& table,
                                                const std::vector<R>& C, int order) {
    if (static_cast<int>(C.size()) != sys.n())
        throw UsageError("initial value C must have one entry per unknown");
    if (order < 0 || order > sys.order())
        throw InsufficientOrderError("solution order must lie in [0, system order]");
    if (table.max_total() < order)
        throw InsufficientOrderError("lifted table too shallow for requested order");
    if (sys.has_negative_support())
        for (const auto& c : C)
            if (FieldTraits<R>::is_zero(c, 0.0))
                throw UsageError(
                    "supports with negative exponents need all C entries nonzero");

    NonlinearSolution<R> sol;
    sol.n = sys.n();
    sol.k = sys.k();
    sol.order = order;
    sol.C = C;
    sol.sym.resize(static_cast<std::size_t>(sys.n()));
    for (int r = 0; r < sys.n(); ++r) {
        ExponentVector row = ExponentVector::unit(sys.n(), r);
        for (const MultiIndex& w : multi_indices_up_to(sys.k(), order)) {
            R prefactor = FieldTraits<R>::from_int((w.total() % 2 == 0) ? 1 : -1);
            for (int u = 0; u < sys.k(); ++u)
                prefactor = FieldTraits<R>::div(prefactor, field_factorial<R>(w.at(u)));
            for (const auto& [beta, series] : table.row(w, row)) {
                PowerSeries<R> shifted = series.shifted_scaled(w, prefactor, order);
                for (const auto& [m, c] : shifted.terms()) {
                    auto& cell = sol.sym[static_cast<std::size_t>(r)][m];
                    auto it = cell.find(beta);
                    if (it == cell.end())
                        cell.emplace(beta, c);
                    else {
                        it->second = it->second + c;
                        if (FieldTraits<R>::is_zero(it->second, 0.0)) cell.erase(it);
                    }
                }
            }
        }
        // Drop empty cells so the stored form is canonical.
        auto& per_m = sol.sym[static_cast<std::size_t>(r)];
        for (auto it = per_m.begin(); it != per_m.end();)
            it = it->second.empty() ? per_m.erase(it) : std::next(it);
    }
    return sol;
}

template <class R>
NonlinearSolution<R> solve_nonlinear(const NonlinearSystem<R>& sys, const LaurentWindow& window,
                                     const std::vector<R>& C, int order, double tol_base = 1e-10) {
    NonlinearIntegrabilityDecision d = is_integrable_nonlinear(sys, window, tol_base);
    if (!d.integrable)
        throw NotIntegrableError("system failed the compatibility check",
                                 d.witness ? d.witness->str() : "");
    LiftedPropagatorTable<R> table(sys, window, order, unit_rows(sys));
    return solve_nonlinear_with_table(sys, table, C, order);
}

// Consistency of the lift: solving the lifted system for a non-unit row
// alpha must reproduce the monomial  prod_s y_s^{alpha_s}  of the unit-row
// solutions.  Sampled over small window vectors; samples whose reachable set
// leaves the window are skipped (reported, never silently truncated).
struct MonomialClosureEntry {
    std::vector<int> alpha;
    std::string status;  // "pass", "fail" or "skipped: ..."
    std::vector<int> position;
    std::string lhs_value, rhs_value;
};

struct MonomialClosureReport {
    std::vector<MonomialClosureEntry> entries;
    bool pass() const {
        for (const auto& e : entries)
            if (e.status == "fail") return false;
        return true;
    }
};

template <class R>
MonomialClosureReport monomial_closure_check(const NonlinearSystem<R>& sys,
                                             const LaurentWindow& window, const std::vector<R>& C,
                                             int order, int max_samples = 8,
                                             double tol_base = 1e-10) {
    MonomialClosureReport rep;
    NonlinearSolution<R> base = solve_nonlinear(sys, window, C, order, tol_base);
    std::vector<PowerSeries<R>> y;
    for (int s = 0; s < sys.n(); ++s) y.push_back(base.series_with_C(s));
    double tol = FieldTraits<R>::exact ? 0.0 : scaled_tolerance(tol_base, sys.coeff_scale());

    // Deterministic sample: window vectors with components in [-2, 2],
    // lexicographic order, excluding the unit rows.
    std::vector<ExponentVector> samples;
    std::vector<int> cur(static_cast<std::size_t>(sys.n()), 0);
    std::function<void(int)> walk = [&](int slot) {
        if (static_cast<int>(samples.size()) >= max_samples) return;
        if (slot == sys.n()) {
            ExponentVector a(cur);
            if (window.contains(a) && !a.is_unit()) samples.push_back(a);
            return;
        }
        for (int v = std::max(-2, window.lo[static_cast<std::size_t>(slot)]);
             v <= std::min(2, window.hi[static_cast<std::size_t>(slot)]); ++v) {
            cur[static_cast<std::size_t>(slot)] = v;
            walk(slot + 1);
        }
    };
    walk(0);

    for (const auto& alpha : samples) {
        MonomialClosureEntry entry;
        entry.alpha = alpha.entries();
        // Negative sample exponents need invertible initial values.
        bool bad_c = false;
        for (int s = 0; s < sys.n(); ++s)
            if (alpha.at(s) < 0 && FieldTraits<R>::is_zero(C[static_cast<std::size_t>(s)], 0.0))
                bad_c = true;
        if (bad_c) {
            entry.status = "skipped: zero initial value under a negative exponent";
            rep.entries.push_back(std::move(entry));
            continue;
        }
        std::vector<ExponentVector> seeds = unit_rows(sys);
        seeds.push_back(alpha);
        try {
            LiftedPropagatorTable<R> table(sys, window, order, seeds);
            PowerSeries<R> lifted_y(sys.k(), order);
            for (const MultiIndex& w : multi_indices_up_to(sys.k(), order)) {
                R prefactor = FieldTraits<R>::from_int((w.total() % 2 == 0) ? 1 : -1);
                for (int u = 0; u < sys.k(); ++u)
                    prefactor = FieldTraits<R>::div(prefactor, field_factorial<R>(w.at(u)));
                PowerSeries<R> collapsed(sys.k(), table.valid_order(w));
                for (const auto& [beta, series] : table.row(w, alpha)) {
                    R cb = FieldTraits<R>::from_int(1);
                    for (int s = 0; s < sys.n(); ++s)
                        cb = cb * field_pow(C[static_cast<std::size_t>(s)], beta.at(s));
                    collapsed = collapsed + series.scaled(cb);
                }
                lifted_y = lifted_y + collapsed.shifted_scaled(w, prefactor, order);
            }
            PowerSeries<R> product =
                PowerSeries<R>::constant(sys.k(), order, FieldTraits<R>::from_int(1));
            for (int s = 0; s < sys.n(); ++s)
                product = product * pow_int(y[static_cast<std::size_t>(s)], alpha.at(s));
            PowerSeries<R> diff = lifted_y - product;
            entry.status = "pass";
            for (const auto& [m, c] : diff.terms()) {
                if (FieldTraits<R>::is_zero(c, tol)) continue;
                entry.status = "fail";
                entry.position = m.entries();
                entry.lhs_value = FieldTraits<R>::str(lifted_y.coeff(m));
                entry.rhs_value = FieldTraits<R>::str(product.coeff(m));
                break;
            }
        } catch (const WindowEscapeError& e) {
            entry.status = std::string("skipped: ") + e.what();
        }
        rep.entries.push_back(std::move(entry));
    }
    return rep;
}

}  // namespace pdeseries
