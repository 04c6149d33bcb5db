#pragma once

#include <future>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pdeseries/series.hpp"

namespace pdeseries {

// Dense grid of series, used for coefficient matrices and propagator entries.
template <class R>
class SeriesMatrix {
public:
    SeriesMatrix(int rows, int cols, int num_vars, int order)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                PowerSeries<R>::zero(num_vars, order)) {
        if (rows < 1 || cols < 1) throw UsageError("matrix needs positive dimensions");
    }

    static SeriesMatrix identity(int n, int num_vars, int order) {
        SeriesMatrix m(n, n, num_vars, order);
        for (int i = 0; i < n; ++i)
            m.at(i, i) = PowerSeries<R>::constant(num_vars, order, FieldTraits<R>::from_int(1));
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    PowerSeries<R>& at(int i, int j) { return data_[index(i, j)]; }
    const PowerSeries<R>& at(int i, int j) const { return data_[index(i, j)]; }

    friend SeriesMatrix operator+(const SeriesMatrix& a, const SeriesMatrix& b) {
        check_same_shape(a, b);
        SeriesMatrix out = a;
        for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = a.data_[i] + b.data_[i];
        return out;
    }
    friend SeriesMatrix operator-(const SeriesMatrix& a, const SeriesMatrix& b) {
        check_same_shape(a, b);
        SeriesMatrix out = a;
        for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = a.data_[i] - b.data_[i];
        return out;
    }
    friend SeriesMatrix operator*(const SeriesMatrix& a, const SeriesMatrix& b) {
        if (a.cols_ != b.rows_) throw UsageError("matrix shape mismatch in product");
        SeriesMatrix out(a.rows_, b.cols_, a.data_[0].num_vars(),
                         std::min(a.min_order(), b.min_order()));
        for (int i = 0; i < a.rows_; ++i)
            for (int j = 0; j < b.cols_; ++j) {
                PowerSeries<R> acc = a.at(i, 0) * b.at(0, j);
                for (int p = 1; p < a.cols_; ++p) acc = acc + a.at(i, p) * b.at(p, j);
                out.at(i, j) = acc;
            }
        return out;
    }

    SeriesMatrix truncated(int new_order) const {
        SeriesMatrix out = *this;
        for (auto& s : out.data_) s = s.truncated(new_order);
        return out;
    }

    int min_order() const {
        int o = data_[0].order();
        for (const auto& s : data_) o = std::min(o, s.order());
        return o;
    }

    bool equal_to_order(const SeriesMatrix& o, int ord, double tol = 0.0) const {
        check_same_shape(*this, o);
        for (std::size_t i = 0; i < data_.size(); ++i)
            if (!series_equal_to_order(data_[i], o.data_[i], ord, tol)) return false;
        return true;
    }

private:
    static void check_same_shape(const SeriesMatrix& a, const SeriesMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw UsageError("matrix shape mismatch");
    }
    std::size_t index(int i, int j) const {
        if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
            throw UsageError("matrix index out of range");
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
               static_cast<std::size_t>(j);
    }
    int rows_, cols_;
    std::vector<PowerSeries<R>> data_;
};

// First-order system in n unknowns y_1..y_n and k variables x_1..x_k:
//
//   d y_r / d x_u + sum_s f[r][s][u](x) * y_s = 0
//
// with every coefficient f[r][s][u] a series valid to the common order N.
// All indices are 0-based internally; reports use 1-based indices.
template <class R>
class LinearSystem {
public:
    LinearSystem(int n, int k, int order)
        : n_(n), k_(k), order_(order),
          f_(static_cast<std::size_t>(n) * n * k, PowerSeries<R>::zero(k, order)) {
        if (n < 1 || k < 1) throw UsageError("system needs n >= 1 unknowns and k >= 1 variables");
        if (order < 1) throw UsageError("system needs order >= 1");
    }

    int n() const { return n_; }
    int k() const { return k_; }
    int order() const { return order_; }

    void set_coeff(int r, int s, int u, const PowerSeries<R>& series) {
        if (series.num_vars() != k_) throw UsageError("coefficient variable-count mismatch");
        if (series.order() < order_)
            throw InsufficientOrderError("coefficient series order below system order");
        f_[index(r, s, u)] = series.truncated(order_);
        scale_cached_ = false;
    }

    const PowerSeries<R>& coeff(int r, int s, int u) const { return f_[index(r, s, u)]; }

    // Largest coefficient magnitude across all f entries; scales the float
    // zero tolerance.  Zero systems report 0.
    double coeff_scale() const {
        if (!scale_cached_) {
            double best = 0.0;
            for (const auto& s : f_) best = std::max(best, s.max_abs_coeff());
            scale_ = best;
            scale_cached_ = true;
        }
        return scale_;
    }

private:
    std::size_t index(int r, int s, int u) const {
        if (r < 0 || r >= n_ || s < 0 || s >= n_ || u < 0 || u >= k_)
            throw UsageError("system coefficient index out of range");
        return (static_cast<std::size_t>(r) * n_ + s) * k_ + u;
    }
    int n_, k_, order_;
    std::vector<PowerSeries<R>> f_;
    mutable double scale_ = 0.0;
    mutable bool scale_cached_ = false;
};

// The compatibility tensor of a linear system.  Entry (t,s,u,v), u < v:
//
//   K[t][s][u][v] = d f[t][s][v]/d x_u - d f[t][s][u]/d x_v
//                   + sum_p f[t][p][u] f[p][s][v] - sum_p f[t][p][v] f[p][s][u]
//
// The system admits series solutions for every initial value exactly when
// this tensor vanishes identically; entries are valid to order N-1.
template <class R>
class CurvatureTensor {
public:
    explicit CurvatureTensor(const LinearSystem<R>& sys)
        : n_(sys.n()), k_(sys.k()), valid_order_(sys.order() - 1),
          coeff_scale_(sys.coeff_scale()) {
        for (int u = 0; u < k_; ++u)
            for (int v = u + 1; v < k_; ++v) {
                SeriesMatrix<R> m(n_, n_, k_, valid_order_);
                for (int t = 0; t < n_; ++t)
                    for (int s = 0; s < n_; ++s) {
                        PowerSeries<R> acc =
                            sys.coeff(t, s, v).derivative(u) - sys.coeff(t, s, u).derivative(v);
                        for (int p = 0; p < n_; ++p)
                            acc = acc + sys.coeff(t, p, u) * sys.coeff(p, s, v) -
                                  sys.coeff(t, p, v) * sys.coeff(p, s, u);
                        m.at(t, s) = acc;
                    }
                pairs_.push_back(std::move(m));
            }
    }

    int n() const { return n_; }
    int k() const { return k_; }
    int valid_order() const { return valid_order_; }
    double coeff_scale() const { return coeff_scale_; }

    // Stored block for an ascending pair u < v.
    const SeriesMatrix<R>& block(int u, int v) const { return pairs_[pair_index(u, v)]; }

    // Entry for arbitrary u, v: antisymmetric in the variable pair, so a
    // swapped access yields the exact negation and u == v yields zero.
    PowerSeries<R> entry(int t, int s, int u, int v) const {
        if (u == v) return PowerSeries<R>::zero(k_, valid_order_);
        if (u < v) return block(u, v).at(t, s);
        return -block(v, u).at(t, s);
    }

private:
    std::size_t pair_index(int u, int v) const {
        if (u < 0 || v <= u || v >= k_) throw UsageError("curvature pair out of range");
        // Position of (u,v) in the list (0,1),(0,2),...,(0,k-1),(1,2),...
        return static_cast<std::size_t>(u) * (2 * k_ - u - 1) / 2 +
               static_cast<std::size_t>(v - u - 1);
    }
    int n_, k_, valid_order_;
    double coeff_scale_;
    std::vector<SeriesMatrix<R>> pairs_;
};

template <class R>
CurvatureTensor<R> curvature(const LinearSystem<R>& sys) {
    return CurvatureTensor<R>(sys);
}

// First offending tensor entry, if any.  Indices are 1-based for reporting.
struct CurvatureWitness {
    int t = 0, s = 0, u = 0, v = 0;
    std::vector<int> position;  // multi-index of the offending coefficient
    std::string value;          // exact scalar text
    std::string str() const {
        std::string p = "(";
        for (std::size_t i = 0; i < position.size(); ++i)
            p += (i ? "," : "") + std::to_string(position[i]);
        p += ")";
        return "entry (t=" + std::to_string(t) + ", s=" + std::to_string(s) +
               ", u=" + std::to_string(u) + ", v=" + std::to_string(v) + ") at x^" + p +
               " has coefficient " + value;
    }
};

struct IntegrabilityDecision {
    bool integrable = false;
    int checked_order = 0;  // decision is "integrable to this order", never absolute
    std::optional<CurvatureWitness> witness;
    std::string verdict() const {
        return integrable ? "integrable-to-order-" + std::to_string(checked_order) : "violated";
    }
};

// Default float zero test: |coef| <= tol_base * (1 + max |f coefficient|).
inline double scaled_tolerance(double tol_base, double coeff_scale) {
    return tol_base * (1.0 + coeff_scale);
}

template <class R>
IntegrabilityDecision is_integrable(const CurvatureTensor<R>& curv, double tol_base = 1e-10) {
    IntegrabilityDecision d;
    d.checked_order = curv.valid_order();
    double tol = FieldTraits<R>::exact ? 0.0 : scaled_tolerance(tol_base, curv.coeff_scale());
    for (int u = 0; u < curv.k(); ++u)
        for (int v = u + 1; v < curv.k(); ++v)
            for (int t = 0; t < curv.n(); ++t)
                for (int s = 0; s < curv.n(); ++s)
                    for (const auto& [m, c] : curv.block(u, v).at(t, s).terms()) {
                        if (FieldTraits<R>::is_zero(c, tol)) continue;
                        d.integrable = false;
                        d.witness = CurvatureWitness{t + 1, s + 1, u + 1, v + 1, m.entries(),
                                                     FieldTraits<R>::str(c)};
                        return d;
                    }
    d.integrable = true;
    return d;
}

template <class R>
IntegrabilityDecision is_integrable(const LinearSystem<R>& sys, double tol_base = 1e-10) {
    return is_integrable(curvature(sys), tol_base);
}

// One recursion step of the transport table: advance a matrix along axis u,
//   step(M)[t][s] = d M[t][s]/d x_u + sum_p f[t][p][u] * M[p][s].
template <class R>
SeriesMatrix<R> propagator_step(const LinearSystem<R>& sys, const SeriesMatrix<R>& m, int u) {
    SeriesMatrix<R> out(m.rows(), m.cols(), sys.k(), std::max(m.min_order() - 1, -1));
    for (int t = 0; t < m.rows(); ++t)
        for (int s = 0; s < m.cols(); ++s) {
            PowerSeries<R> acc = m.at(t, s).derivative(u);
            for (int p = 0; p < sys.n(); ++p) acc = acc + sys.coeff(t, p, u) * m.at(p, s);
            out.at(t, s) = acc;
        }
    return out;
}

// Two-route discrepancy record kept in diagnostic mode: starting from the
// table entry at `base`, advancing along v then u versus u then v differs by
//   lhs[t][s] = sum_q K[t][q][u][v] * base[q][s]  (the stored rhs),
// an identity that holds whether or not the system is compatible.
template <class R>
struct CommutationDefect {
    MultiIndex base;
    int u = 0, v = 0;  // 0-based axes, u < v
    SeriesMatrix<R> lhs;
    SeriesMatrix<R> rhs;
};

struct PropagatorOptions {
    bool allow_non_integrable = false;  // skip the compatibility gate
    bool record_defects = false;        // keep two-route discrepancy records
    int threads = 1;
    double tol_base = 1e-10;
};

// Table of transport coefficient matrices indexed by multi-index w.  Entry w
// is valid to series order N - total(w).  The canonical build route reaches w
// from w minus one step along its lowest-index nonzero axis, i.e. that axis
// is incremented last; compatibility makes every other route agree.
template <class R>
class PropagatorTable {
public:
    PropagatorTable(const LinearSystem<R>& sys, int max_total, PropagatorOptions opts = {})
        : max_total_(max_total), series_order_(sys.order()) {
        if (max_total < 0) throw UsageError("propagator table needs max_total >= 0");
        if (max_total > sys.order())
            throw InsufficientOrderError(
                "propagator table to total degree " + std::to_string(max_total) +
                " needs system order >= " + std::to_string(max_total) + ", have " +
                std::to_string(sys.order()));
        std::optional<CurvatureTensor<R>> curv;
        if (!opts.allow_non_integrable || opts.record_defects) curv.emplace(sys);
        if (!opts.allow_non_integrable) {
            IntegrabilityDecision d = is_integrable(*curv, opts.tol_base);
            if (!d.integrable)
                throw NotIntegrableError("system failed the compatibility check",
                                         d.witness ? d.witness->str() : "");
        }

        table_.emplace(MultiIndex::zero(sys.k()),
                       SeriesMatrix<R>::identity(sys.n(), sys.k(), sys.order()));
        for (int level = 1; level <= max_total; ++level) {
            auto ws = multi_indices_of_total(sys.k(), level);
            std::vector<SeriesMatrix<R>> results(
                ws.size(), SeriesMatrix<R>(sys.n(), sys.n(), sys.k(), sys.order() - level));
            auto compute = [&](std::size_t i) {
                int axis = ws[i].first_nonzero_axis();
                results[i] = propagator_step(sys, table_.at(ws[i].minus_axis(axis)), axis);
            };
            int threads = std::max(1, opts.threads);
            if (threads == 1 || ws.size() < 2) {
                for (std::size_t i = 0; i < ws.size(); ++i) compute(i);
            } else {
                // Entries within a level are independent; results land in
                // pre-sized slots, so scheduling cannot affect the output.
                std::vector<std::future<void>> futs;
                std::size_t chunk = (ws.size() + threads - 1) / threads;
                for (std::size_t begin = 0; begin < ws.size(); begin += chunk)
                    futs.push_back(std::async(std::launch::async, [&, begin] {
                        for (std::size_t i = begin; i < std::min(begin + chunk, ws.size()); ++i)
                            compute(i);
                    }));
                for (auto& f : futs) f.get();
            }
            for (std::size_t i = 0; i < ws.size(); ++i)
                table_.emplace(ws[i], std::move(results[i]));
        }

        if (opts.record_defects && sys.k() >= 2) {
            for (const auto& [w, mat] : table_) {
                if (w.total() > max_total - 2) break;
                for (int u = 0; u < sys.k(); ++u)
                    for (int v = u + 1; v < sys.k(); ++v) {
                        SeriesMatrix<R> uv = propagator_step(sys, propagator_step(sys, mat, v), u);
                        SeriesMatrix<R> vu = propagator_step(sys, propagator_step(sys, mat, u), v);
                        SeriesMatrix<R> lhs = uv - vu;
                        SeriesMatrix<R> rhs = (curv->block(u, v) * mat).truncated(lhs.min_order());
                        defects_.push_back(CommutationDefect<R>{w, u, v, std::move(lhs),
                                                                std::move(rhs)});
                    }
            }
        }
    }

    int max_total() const { return max_total_; }
    int valid_order(const MultiIndex& w) const { return series_order_ - w.total(); }
    const SeriesMatrix<R>& entry(const MultiIndex& w) const {
        auto it = table_.find(w);
        if (it == table_.end()) throw UsageError("propagator entry " + w.str() + " not computed");
        return it->second;
    }
    const std::map<MultiIndex, SeriesMatrix<R>, GradedLexLess>& entries() const { return table_; }
    const std::vector<CommutationDefect<R>>& defects() const { return defects_; }

private:
    int max_total_;
    int series_order_;
    std::map<MultiIndex, SeriesMatrix<R>, GradedLexLess> table_;
    std::vector<CommutationDefect<R>> defects_;
};

template <class R>
PropagatorTable<R> propagators(const LinearSystem<R>& sys, int max_total,
                               PropagatorOptions opts = {}) {
    return PropagatorTable<R>(sys, max_total, opts);
}

// The derivative the system geometry prefers:  (D_u y)_r = d y_r/d x_u
// + sum_s f[r][s][u] y_s.  Solutions are exactly the tuples it annihilates.
template <class R>
std::vector<PowerSeries<R>> covariant_apply(const LinearSystem<R>& sys, int u,
                                            const std::vector<PowerSeries<R>>& y) {
    if (static_cast<int>(y.size()) != sys.n()) throw UsageError("covariant_apply size mismatch");
    if (u < 0 || u >= sys.k()) throw UsageError("covariant_apply axis out of range");
    std::vector<PowerSeries<R>> out;
    out.reserve(y.size());
    for (int r = 0; r < sys.n(); ++r) {
        PowerSeries<R> acc = y[static_cast<std::size_t>(r)].derivative(u);
        for (int s = 0; s < sys.n(); ++s)
            acc = acc + sys.coeff(r, s, u) * y[static_cast<std::size_t>(s)];
        out.push_back(std::move(acc));
    }
    return out;
}

struct IteratedCovariantReport {
    bool equal = false;
    int compared_order = 0;
    // First difference, if any (1-based unknown, exponents, both values).
    int r = 0;
    std::vector<int> position;
    std::string lhs_value, rhs_value;
};

// Checks that iterating the preferred derivative per the multi-index w equals
// its expansion through the transport table:
//
//   (D_1^{w_1} ... D_k^{w_k} y)_r
//     = sum_{m <= w} prod_u binom(w_u, m_u) * sum_s P<m>[r][s] * d^{w-m} y_s,
//
// comparing both sides to their common validity order.  Requires a
// compatible system (the iterated derivatives must not depend on ordering).
template <class R>
IteratedCovariantReport iterated_covariant_check(const LinearSystem<R>& sys, const MultiIndex& w,
                                                 const std::vector<PowerSeries<R>>& y,
                                                 double tol_base = 1e-10) {
    if (w.size() != sys.k()) throw UsageError("iterated check: w size mismatch");
    if (static_cast<int>(y.size()) != sys.n()) throw UsageError("iterated check: y size mismatch");
    int y_order = y[0].order();
    for (const auto& s : y) y_order = std::min(y_order, s.order());
    if (y_order < w.total())
        throw InsufficientOrderError("iterated check: y order below total(w)");

    // Left side: apply the axis-k derivative first, axis-1 last.
    std::vector<PowerSeries<R>> lhs = y;
    for (int u = sys.k() - 1; u >= 0; --u)
        for (int rep = 0; rep < w.at(u); ++rep) lhs = covariant_apply(sys, u, lhs);

    PropagatorTable<R> table(sys, w.total(), PropagatorOptions{false, false, 1, tol_base});

    // Right side: transport-table expansion.
    std::vector<PowerSeries<R>> rhs(static_cast<std::size_t>(sys.n()),
                                    PowerSeries<R>::zero(sys.k(), y_order));
    std::vector<int> m_entries(static_cast<std::size_t>(sys.k()), 0);
    std::function<void(int)> walk = [&](int axis) {
        if (axis == sys.k()) {
            MultiIndex m(m_entries);
            R factor = FieldTraits<R>::from_int(1);
            for (int u = 0; u < sys.k(); ++u)
                factor = factor * field_binomial<R>(w.at(u), m.at(u));
            std::vector<PowerSeries<R>> dy;
            dy.reserve(y.size());
            for (const auto& ys : y) {
                PowerSeries<R> d = ys;
                for (int u = 0; u < sys.k(); ++u)
                    for (int rep = 0; rep < w.at(u) - m.at(u); ++rep) d = d.derivative(u);
                dy.push_back(std::move(d));
            }
            const SeriesMatrix<R>& pm = table.entry(m);
            for (int r = 0; r < sys.n(); ++r) {
                PowerSeries<R> acc = pm.at(r, 0) * dy[0];
                for (int s = 1; s < sys.n(); ++s) acc = acc + pm.at(r, s) * dy[static_cast<std::size_t>(s)];
                rhs[static_cast<std::size_t>(r)] =
                    rhs[static_cast<std::size_t>(r)] + acc.scaled(factor);
            }
            return;
        }
        for (int value = 0; value <= w.at(axis); ++value) {
            m_entries[static_cast<std::size_t>(axis)] = value;
            walk(axis + 1);
        }
    };
    walk(0);

    IteratedCovariantReport rep;
    rep.compared_order = lhs[0].order();
    for (const auto& s : lhs) rep.compared_order = std::min(rep.compared_order, s.order());
    for (const auto& s : rhs) rep.compared_order = std::min(rep.compared_order, s.order());
    double tol = FieldTraits<R>::exact ? 0.0 : scaled_tolerance(tol_base, sys.coeff_scale());
    for (int r = 0; r < sys.n(); ++r) {
        PowerSeries<R> diff = lhs[static_cast<std::size_t>(r)].truncated(rep.compared_order) -
                              rhs[static_cast<std::size_t>(r)].truncated(rep.compared_order);
        for (const auto& [m, c] : diff.terms()) {
            if (FieldTraits<R>::is_zero(c, tol)) continue;
            rep.equal = false;
            rep.r = r + 1;
            rep.position = m.entries();
            rep.lhs_value = FieldTraits<R>::str(lhs[static_cast<std::size_t>(r)].coeff(m));
            rep.rhs_value = FieldTraits<R>::str(rhs[static_cast<std::size_t>(r)].coeff(m));
            return rep;
        }
    }
    rep.equal = true;
    return rep;
}

// Unique series solution with y(0) = C, assembled from the transport table:
//
//   y_r(x) = sum_w prod_u (-x_u)^{w_u} / w_u!  *  sum_s P<w>[r][s](x) * C_s,
//
// truncated to total degree `order`.  Each Taylor coefficient of degree
// <= order is exact because entry w is valid to N - total(w) and the shift
// by w restores the full order N >= order.
template <class R>
struct LinearSolution {
    int n = 0, k = 0, order = 0;
    std::vector<R> C;
    std::vector<PowerSeries<R>> y;  // one series per unknown

    R coefficient(int r, const MultiIndex& m) const {
        if (r < 0 || r >= n) throw UsageError("solution unknown index out of range");
        return y[static_cast<std::size_t>(r)].coeff(m);
    }
    std::vector<R> evaluate(const std::vector<R>& x) const {
        std::vector<R> out;
        out.reserve(y.size());
        for (const auto& s : y) out.push_back(s.evaluate(x));
        return out;
    }
};

template <class R>
LinearSolution<R> solve_linear_with_table(const LinearSystem<R>& sys,
                                          const PropagatorTable<R>& table,
                                          const std::vector<R>& C, int order) {
    if (static_cast<int>(C.size()) != sys.n())
        throw UsageError("initial value C must have one entry per unknown");
    if (order < 0 || order > sys.order())
        throw InsufficientOrderError("solution order must lie in [0, system order]");
    if (table.max_total() < order)
        throw InsufficientOrderError("propagator table too shallow for requested order");

    LinearSolution<R> sol;
    sol.n = sys.n();
    sol.k = sys.k();
    sol.order = order;
    sol.C = C;
    sol.y.assign(static_cast<std::size_t>(sys.n()), PowerSeries<R>::zero(sys.k(), order));
    for (const auto& [w, mat] : table.entries()) {
        if (w.total() > order) break;
        R prefactor = FieldTraits<R>::from_int((w.total() % 2 == 0) ? 1 : -1);
        for (int u = 0; u < sys.k(); ++u)
            prefactor = FieldTraits<R>::div(prefactor, field_factorial<R>(w.at(u)));
        for (int r = 0; r < sys.n(); ++r) {
            PowerSeries<R> row = mat.at(r, 0).scaled(C[0]);
            for (int s = 1; s < sys.n(); ++s)
                row = row + mat.at(r, s).scaled(C[static_cast<std::size_t>(s)]);
            sol.y[static_cast<std::size_t>(r)] =
                sol.y[static_cast<std::size_t>(r)] + row.shifted_scaled(w, prefactor, order);
        }
    }
    return sol;
}

template <class R>
LinearSolution<R> solve_linear(const LinearSystem<R>& sys, const std::vector<R>& C, int order,
                               PropagatorOptions opts = {}) {
    PropagatorTable<R> table(sys, order, opts);
    return solve_linear_with_table(sys, table, C, order);
}

// Convergence-radius heuristic (not a proof).  M bounds the transport
// coefficients with single-step multi-indices a in {0,1}^k by the coefficient
// sum  sum_m |coef_m| * rho^total(m)  on the polydisc of radius assumed_rho;
// the returned rho is the largest value <= assumed_rho with
// n * M * rho^u <= 1 for every u in 1..k.
struct RadiusEstimate {
    double rho = 0.0;
    double M = 0.0;
    double assumed_rho = 0.0;
    std::string notes;
};

template <class R>
RadiusEstimate radius_estimate(const LinearSystem<R>& sys, double assumed_rho) {
    if (!(assumed_rho > 0.0)) throw UsageError("assumed_rho must be positive");
    if (sys.order() < sys.k())
        throw InsufficientOrderError("radius estimate needs system order >= k");
    // The gate is deliberately skipped: the bound is a coefficient statement
    // and stays meaningful for diagnostic use on incompatible systems.
    PropagatorTable<R> table(sys, sys.k(), PropagatorOptions{true, false, 1, 1e-10});

    RadiusEstimate est;
    est.assumed_rho = assumed_rho;
    std::vector<int> a(static_cast<std::size_t>(sys.k()), 0);
    std::function<void(int)> walk = [&](int axis) {
        if (axis == sys.k()) {
            const SeriesMatrix<R>& m = table.entry(MultiIndex(a));
            for (int i = 0; i < sys.n(); ++i)
                for (int j = 0; j < sys.n(); ++j) {
                    double sum = 0.0;
                    for (const auto& [mi, c] : m.at(i, j).terms())
                        sum += FieldTraits<R>::abs_double(c) * std::pow(assumed_rho, mi.total());
                    est.M = std::max(est.M, sum);
                }
            return;
        }
        for (int bit = 0; bit <= 1; ++bit) {
            a[static_cast<std::size_t>(axis)] = bit;
            walk(axis + 1);
        }
    };
    walk(0);

    double rho = assumed_rho;
    int binding_u = 0;
    double nM = static_cast<double>(sys.n()) * est.M;
    for (int u = 1; u <= sys.k(); ++u) {
        if (nM <= 0.0) continue;
        double cap = std::pow(1.0 / nM, 1.0 / u);
        if (cap < rho) {
            rho = cap;
            binding_u = u;
        }
    }
    est.rho = rho;
    est.notes = binding_u == 0
                    ? "assumed radius is binding"
                    : "binding constraint n*M*rho^u <= 1 at u=" + std::to_string(binding_u);
    est.notes += "; heuristic bound, not a proof";
    return est;
}

}  // namespace pdeseries
