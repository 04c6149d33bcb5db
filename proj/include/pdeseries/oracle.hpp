#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdeseries/linear.hpp"
#include "pdeseries/nonlinear.hpp"
#include "pdeseries/series.hpp"

namespace pdeseries {

// Independent checks for computed solutions: symbolic residual substitution,
// a successive-differentiation coefficient oracle, and a numerical axis-path
// integrator.  The oracle routines deliberately avoid the transport-table
// machinery (and, for the kernel below, even the shared series operators):
// two independent implementations cannot hide the same bug.

namespace oracle_detail {

// Minimal truncated-series arithmetic over raw term maps.  This duplicates
// logic that exists elsewhere on purpose; see the note above.
template <class R>
using Terms = std::map<MultiIndex, R, GradedLexLess>;

template <class R>
R term_at(const Terms<R>& t, const MultiIndex& m) {
    auto it = t.find(m);
    return it == t.end() ? FieldTraits<R>::from_int(0) : it->second;
}

template <class R>
void drop_exact_zeros(Terms<R>& t) {
    for (auto it = t.begin(); it != t.end();) {
        if (FieldTraits<R>::is_zero(it->second, 0.0)) it = t.erase(it);
        else ++it;
    }
}

template <class R>
Terms<R> conv_mul(const Terms<R>& a, const Terms<R>& b, int max_deg) {
    Terms<R> out;
    for (const auto& [p, av] : a) {
        if (p.total() > max_deg) break;
        for (const auto& [q, bv] : b) {
            if (p.total() + q.total() > max_deg) break;
            MultiIndex m = p.plus(q);
            auto it = out.find(m);
            if (it == out.end()) out.emplace(m, av * bv);
            else it->second = it->second + av * bv;
        }
    }
    drop_exact_zeros(out);
    return out;
}

template <class R>
Terms<R> conv_recip(const Terms<R>& a, int k, int max_deg) {
    MultiIndex z = MultiIndex::zero(k);
    R a0 = term_at(a, z);
    if (FieldTraits<R>::is_zero(a0, 0.0))
        throw UsageError("reciprocal of a series with zero constant term");
    Terms<R> inv;
    inv.emplace(z, FieldTraits<R>::div(FieldTraits<R>::from_int(1), a0));
    for (int d = 1; d <= max_deg; ++d) {
        for (const auto& m : multi_indices_of_total(k, d)) {
            R acc = FieldTraits<R>::from_int(0);
            for (const auto& [q, av] : a) {
                if (q.total() == 0) continue;
                if (q.total() > d) break;
                if (!q.componentwise_leq(m)) continue;
                acc = acc + av * term_at(inv, m.minus(q));
            }
            R value = FieldTraits<R>::div(-acc, a0);
            if (!FieldTraits<R>::is_zero(value, 0.0)) inv.emplace(m, value);
        }
    }
    return inv;
}

template <class R>
Terms<R> conv_pow(const Terms<R>& base, int e, int k, int max_deg) {
    if (e < 0) return conv_pow(conv_recip(base, k, max_deg), -e, k, max_deg);
    Terms<R> out;
    out.emplace(MultiIndex::zero(k), FieldTraits<R>::from_int(1));
    for (int i = 0; i < e; ++i) out = conv_mul(out, base, max_deg);
    return out;
}

}  // namespace oracle_detail

// ---------------------------------------------------------------------------
// Residual substitution
// ---------------------------------------------------------------------------

template <class R>
struct ResidualEntry {
    int r = 0, u = 0;  // 1-based in reports
    PowerSeries<R> residual;
    double max_abs = 0.0;  // largest |coefficient| up to the checked degree
};

struct ResidualWitness {
    int r = 0, u = 0;  // 1-based
    std::vector<int> position;
    std::string value;

    std::string str() const {
        std::string s = "residual for unknown " + std::to_string(r) + ", axis " +
                        std::to_string(u) + " has coefficient " + value + " at x^(";
        for (std::size_t i = 0; i < position.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(position[i]);
        }
        return s + ")";
    }
};

template <class R>
struct ResidualReport {
    bool pass = false;
    int checked_degree = -1;
    std::vector<ResidualEntry<R>> entries;  // row-major (r, u)
    std::optional<ResidualWitness> witness;
};

namespace oracle_detail {

// Shared scan over assembled residual series: fills max_abs, finds the first
// nonzero coefficient (r, then u, then graded-lex position).
template <class R>
ResidualReport<R> scan_residuals(std::vector<ResidualEntry<R>>& entries, double tol) {
    ResidualReport<R> report;
    report.checked_degree = INT_MAX;
    for (const auto& e : entries)
        report.checked_degree = std::min(report.checked_degree, e.residual.order());
    if (entries.empty()) report.checked_degree = -1;
    report.pass = true;
    for (auto& e : entries) {
        e.max_abs = 0.0;
        for (const auto& [m, v] : e.residual.terms()) {
            if (m.total() > report.checked_degree) break;
            e.max_abs = std::max(e.max_abs, FieldTraits<R>::abs_double(v));
            if (!FieldTraits<R>::is_zero(v, tol) && report.pass) {
                report.pass = false;
                report.witness = ResidualWitness{e.r, e.u, m.entries(), FieldTraits<R>::str(v)};
            }
        }
    }
    report.entries = std::move(entries);
    return report;
}

}  // namespace oracle_detail

// Substitutes y into d y_r/d x_u + sum_s f_{rsu} y_s and checks that every
// coefficient up to the common valid degree vanishes.
template <class R>
ResidualReport<R> residual_linear(const LinearSystem<R>& sys, const std::vector<PowerSeries<R>>& y,
                                  double tol_base = 1e-10) {
    if (static_cast<int>(y.size()) != sys.n())
        throw UsageError("residual check needs one series per unknown");
    double scale = sys.coeff_scale();
    for (const auto& s : y) {
        if (s.num_vars() != sys.k()) throw UsageError("solution variable-count mismatch");
        scale = std::max(scale, s.max_abs_coeff());
    }
    double tol = FieldTraits<R>::exact ? 0.0 : scaled_tolerance(tol_base, scale);

    std::vector<ResidualEntry<R>> entries;
    for (int r = 0; r < sys.n(); ++r) {
        for (int u = 0; u < sys.k(); ++u) {
            PowerSeries<R> res = y[static_cast<std::size_t>(r)].derivative(u);
            for (int s = 0; s < sys.n(); ++s)
                res = res + sys.coeff(r, s, u) * y[static_cast<std::size_t>(s)];
            entries.push_back(ResidualEntry<R>{r + 1, u + 1, std::move(res), 0.0});
        }
    }
    return oracle_detail::scan_residuals(entries, tol);
}

template <class R>
ResidualReport<R> residual_linear(const LinearSystem<R>& sys, const LinearSolution<R>& sol,
                                  double tol_base = 1e-10) {
    return residual_linear(sys, sol.y, tol_base);
}

// Substitutes y into d y_r/d x_u + sum_alpha f_{r,alpha,u} y^alpha.  Negative
// support exponents use truncated reciprocals, so each such y_s needs a
// nonzero constant term.
template <class R>
ResidualReport<R> residual_nonlinear(const NonlinearSystem<R>& sys,
                                     const std::vector<PowerSeries<R>>& y,
                                     double tol_base = 1e-10) {
    if (static_cast<int>(y.size()) != sys.n())
        throw UsageError("residual check needs one series per unknown");
    double scale = sys.coeff_scale();
    int min_order = INT_MAX;
    for (const auto& s : y) {
        if (s.num_vars() != sys.k()) throw UsageError("solution variable-count mismatch");
        scale = std::max(scale, s.max_abs_coeff());
        min_order = std::min(min_order, s.order());
    }
    double tol = FieldTraits<R>::exact ? 0.0 : scaled_tolerance(tol_base, scale);

    // Monomial powers are shared across equations; compute each once.
    std::map<ExponentVector, PowerSeries<R>> monomials;
    for (const auto& alpha : sys.support()) {
        PowerSeries<R> prod = PowerSeries<R>::constant(sys.k(), min_order,
                                                       FieldTraits<R>::from_int(1));
        for (int s = 0; s < sys.n(); ++s)
            if (alpha.at(s) != 0)
                prod = prod * pow_int(y[static_cast<std::size_t>(s)], alpha.at(s));
        monomials.emplace(alpha, std::move(prod));
    }

    std::vector<ResidualEntry<R>> entries;
    for (int r = 0; r < sys.n(); ++r) {
        for (int u = 0; u < sys.k(); ++u) {
            PowerSeries<R> res = y[static_cast<std::size_t>(r)].derivative(u);
            for (const auto& alpha : sys.support()) {
                const PowerSeries<R>& f = sys.coeff(r, alpha, u);
                if (f.terms().empty()) continue;
                res = res + f * monomials.at(alpha);
            }
            entries.push_back(ResidualEntry<R>{r + 1, u + 1, std::move(res), 0.0});
        }
    }
    return oracle_detail::scan_residuals(entries, tol);
}

template <class R>
ResidualReport<R> residual_nonlinear(const NonlinearSystem<R>& sys,
                                     const NonlinearSolution<R>& sol,
                                     double tol_base = 1e-10) {
    std::vector<PowerSeries<R>> y;
    y.reserve(static_cast<std::size_t>(sol.n));
    for (int s = 0; s < sol.n; ++s) y.push_back(sol.series_with_C(s));
    return residual_nonlinear(sys, y, tol_base);
}

// ---------------------------------------------------------------------------
// Successive-differentiation coefficient oracle
// ---------------------------------------------------------------------------

struct TaylorWitness {
    int r = 0;  // 1-based
    std::vector<int> position;
    int axis_a = 0, axis_b = 0;  // 1-based
    std::string value_a, value_b;

    std::string str() const {
        std::string s = "coefficient of unknown " + std::to_string(r) + " at x^(";
        for (std::size_t i = 0; i < position.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(position[i]);
        }
        s += ") is path-dependent: axis " + std::to_string(axis_a) + " gives " + value_a +
             ", axis " + std::to_string(axis_b) + " gives " + value_b;
        return s;
    }
};

template <class R>
struct TaylorOracleResult {
    int n = 0, k = 0, order = 0;
    std::vector<PowerSeries<R>> y;
    bool consistent = true;  // every coefficient agreed across all usable axes
    std::optional<TaylorWitness> witness;
};

// Computes the solution coefficients directly from the equations: each first
// partial of y is expressed by the system, so the coefficient at m follows
// from degree-(|m|-1) data along any axis with m_u > 0.  The lowest such axis
// defines the stored value; every other axis is recomputed and compared, and
// the first disagreement is reported (for a compatible system all axes agree).
// No transport tables are used anywhere in here.
template <class R>
TaylorOracleResult<R> taylor_oracle_linear(const LinearSystem<R>& sys, const std::vector<R>& C,
                                           int order, double tol_base = 1e-10) {
    using oracle_detail::Terms;
    using oracle_detail::term_at;
    if (static_cast<int>(C.size()) != sys.n())
        throw UsageError("initial value C must have one entry per unknown");
    if (order < 0 || order > sys.order())
        throw InsufficientOrderError("oracle order must lie in [0, system order]");

    const int n = sys.n(), k = sys.k();
    double running_scale = sys.coeff_scale();
    for (const auto& c : C) running_scale = std::max(running_scale, FieldTraits<R>::abs_double(c));

    std::vector<Terms<R>> a(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r)
        if (!FieldTraits<R>::is_zero(C[static_cast<std::size_t>(r)], 0.0))
            a[static_cast<std::size_t>(r)].emplace(MultiIndex::zero(k),
                                                   C[static_cast<std::size_t>(r)]);

    TaylorOracleResult<R> result;
    result.n = n;
    result.k = k;
    result.order = order;

    auto axis_value = [&](int r, const MultiIndex& m, int u) {
        MultiIndex mp = m.minus_axis(u);
        R acc = FieldTraits<R>::from_int(0);
        for (int s = 0; s < n; ++s) {
            const auto& f = sys.coeff(r, s, u);
            for (const auto& [q, fc] : f.terms()) {
                if (q.total() > mp.total()) break;
                if (!q.componentwise_leq(mp)) continue;
                acc = acc + fc * term_at(a[static_cast<std::size_t>(s)], mp.minus(q));
            }
        }
        return FieldTraits<R>::div(-acc, FieldTraits<R>::from_int(m.at(u)));
    };

    for (int d = 1; d <= order; ++d) {
        for (const auto& m : multi_indices_of_total(k, d)) {
            for (int r = 0; r < n; ++r) {
                int first_axis = m.first_nonzero_axis();
                R value = axis_value(r, m, first_axis);
                running_scale = std::max(running_scale, FieldTraits<R>::abs_double(value));
                for (int u = first_axis + 1; u < k; ++u) {
                    if (m.at(u) == 0) continue;
                    R other = axis_value(r, m, u);
                    double tol = FieldTraits<R>::exact
                                     ? 0.0
                                     : scaled_tolerance(tol_base, running_scale);
                    if (!FieldTraits<R>::is_zero(value - other, tol) && result.consistent) {
                        result.consistent = false;
                        result.witness = TaylorWitness{
                            r + 1, m.entries(), first_axis + 1, u + 1,
                            FieldTraits<R>::str(value), FieldTraits<R>::str(other)};
                    }
                }
                if (!FieldTraits<R>::is_zero(value, 0.0))
                    a[static_cast<std::size_t>(r)].emplace(m, value);
            }
        }
    }

    for (int r = 0; r < n; ++r) {
        PowerSeries<R> s(k, order);
        for (const auto& [m, v] : a[static_cast<std::size_t>(r)]) s.set_coeff(m, v);
        result.y.push_back(std::move(s));
    }
    return result;
}

template <class R>
TaylorOracleResult<R> taylor_oracle_nonlinear(const NonlinearSystem<R>& sys,
                                              const std::vector<R>& C, int order,
                                              double tol_base = 1e-10) {
    using oracle_detail::Terms;
    using oracle_detail::conv_mul;
    using oracle_detail::conv_pow;
    using oracle_detail::term_at;
    if (static_cast<int>(C.size()) != sys.n())
        throw UsageError("initial value C must have one entry per unknown");
    if (order < 0 || order > sys.order())
        throw InsufficientOrderError("oracle order must lie in [0, system order]");
    if (sys.has_negative_support())
        for (const auto& c : C)
            if (FieldTraits<R>::is_zero(c, 0.0))
                throw UsageError(
                    "negative support exponents need nonzero initial values in every unknown");

    const int n = sys.n(), k = sys.k();
    double running_scale = sys.coeff_scale();
    for (const auto& c : C) running_scale = std::max(running_scale, FieldTraits<R>::abs_double(c));

    std::vector<Terms<R>> a(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r)
        if (!FieldTraits<R>::is_zero(C[static_cast<std::size_t>(r)], 0.0))
            a[static_cast<std::size_t>(r)].emplace(MultiIndex::zero(k),
                                                   C[static_cast<std::size_t>(r)]);

    TaylorOracleResult<R> result;
    result.n = n;
    result.k = k;
    result.order = order;

    for (int d = 1; d <= order; ++d) {
        // y is complete to degree d-1, which pins every monomial power and
        // therefore the degree-(d-1) slice of each right-hand side.
        std::map<ExponentVector, Terms<R>> powers;
        for (const auto& alpha : sys.support()) {
            Terms<R> prod;
            prod.emplace(MultiIndex::zero(k), FieldTraits<R>::from_int(1));
            for (int s = 0; s < n; ++s)
                if (alpha.at(s) != 0)
                    prod = conv_mul(prod,
                                    conv_pow(a[static_cast<std::size_t>(s)], alpha.at(s), k, d - 1),
                                    d - 1);
            powers.emplace(alpha, std::move(prod));
        }
        std::vector<Terms<R>> rhs(static_cast<std::size_t>(n * k));
        for (int r = 0; r < n; ++r) {
            for (int u = 0; u < k; ++u) {
                Terms<R> acc;
                for (const auto& alpha : sys.support()) {
                    const auto& f = sys.coeff(r, alpha, u);
                    if (f.terms().empty()) continue;
                    Terms<R> fterms(f.terms().begin(), f.terms().end());
                    Terms<R> part = conv_mul(fterms, powers.at(alpha), d - 1);
                    for (const auto& [m, v] : part) {
                        auto it = acc.find(m);
                        if (it == acc.end()) acc.emplace(m, v);
                        else it->second = it->second + v;
                    }
                }
                rhs[static_cast<std::size_t>(r * k + u)] = std::move(acc);
            }
        }

        for (const auto& m : multi_indices_of_total(k, d)) {
            for (int r = 0; r < n; ++r) {
                int first_axis = m.first_nonzero_axis();
                auto axis_value = [&](int u) {
                    R num = -term_at(rhs[static_cast<std::size_t>(r * k + u)], m.minus_axis(u));
                    return FieldTraits<R>::div(num, FieldTraits<R>::from_int(m.at(u)));
                };
                R value = axis_value(first_axis);
                running_scale = std::max(running_scale, FieldTraits<R>::abs_double(value));
                for (int u = first_axis + 1; u < k; ++u) {
                    if (m.at(u) == 0) continue;
                    R other = axis_value(u);
                    double tol = FieldTraits<R>::exact
                                     ? 0.0
                                     : scaled_tolerance(tol_base, running_scale);
                    if (!FieldTraits<R>::is_zero(value - other, tol) && result.consistent) {
                        result.consistent = false;
                        result.witness = TaylorWitness{
                            r + 1, m.entries(), first_axis + 1, u + 1,
                            FieldTraits<R>::str(value), FieldTraits<R>::str(other)};
                    }
                }
                if (!FieldTraits<R>::is_zero(value, 0.0))
                    a[static_cast<std::size_t>(r)].emplace(m, value);
            }
        }
    }

    for (int r = 0; r < n; ++r) {
        PowerSeries<R> s(k, order);
        for (const auto& [m, v] : a[static_cast<std::size_t>(r)]) s.set_coeff(m, v);
        result.y.push_back(std::move(s));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Rational -> double conversion (for the numerical cross-checks)
// ---------------------------------------------------------------------------

inline PowerSeries<double> to_double(const PowerSeries<Rational>& a) {
    PowerSeries<double> out(a.num_vars(), a.order());
    for (const auto& [m, v] : a.terms()) out.set_coeff(m, v.to_double());
    return out;
}

inline std::vector<double> to_double(const std::vector<Rational>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(x.to_double());
    return out;
}

inline LinearSystem<double> to_double(const LinearSystem<Rational>& sys) {
    LinearSystem<double> out(sys.n(), sys.k(), sys.order());
    for (int r = 0; r < sys.n(); ++r)
        for (int s = 0; s < sys.n(); ++s)
            for (int u = 0; u < sys.k(); ++u) {
                const auto& f = sys.coeff(r, s, u);
                if (!f.terms().empty()) out.set_coeff(r, s, u, to_double(f));
            }
    return out;
}

inline NonlinearSystem<double> to_double(const NonlinearSystem<Rational>& sys) {
    NonlinearSystem<double> out(sys.n(), sys.k(), sys.order());
    for (int r = 0; r < sys.n(); ++r)
        for (const auto& alpha : sys.support())
            for (int u = 0; u < sys.k(); ++u) {
                const auto& f = sys.coeff(r, alpha, u);
                if (!f.terms().empty()) out.set_coeff(r, alpha, u, to_double(f));
            }
    return out;
}

// ---------------------------------------------------------------------------
// Axis-path numerical integration (classical 4th-order one-step method)
// ---------------------------------------------------------------------------

struct PathIntegrationResult {
    std::vector<double> y;        // endpoint values, one per unknown
    std::vector<int> axis_order;  // 0-based traversal order
    int steps_per_segment = 0;
    int method_order = 4;
    double est_error = 0.0;  // max-norm difference against a half-resolution run, /15
    bool ok = true;
    std::string diagnostic;
};

namespace oracle_detail {

inline double ipow(double base, int e) {
    if (e < 0) return 1.0 / ipow(base, -e);
    double out = 1.0;
    for (int i = 0; i < e; ++i) out *= base;
    return out;
}

// Shared fixed-step driver.  rhs(u, point, y, dy) fills dy with d y/d x_u at
// the given point.  Each segment moves one coordinate from 0 to its target
// while the others stay fixed, so the system restricts to an ODE there.
inline bool rk4_axis_path(
    int k, const std::vector<double>& C, const std::vector<double>& x, int steps,
    const std::vector<int>& order,
    const std::function<void(int, const std::vector<double>&, const std::vector<double>&,
                             std::vector<double>&)>& rhs,
    std::vector<double>& y, std::string& diagnostic) {
    const std::size_t n = C.size();
    y = C;
    std::vector<double> point(static_cast<std::size_t>(k), 0.0);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (int leg = 0; leg < k; ++leg) {
        int u = order[static_cast<std::size_t>(leg)];
        double target = x[static_cast<std::size_t>(u)];
        if (target == 0.0) continue;
        double h = target / steps;
        for (int step = 0; step < steps; ++step) {
            double t = h * step;
            auto eval = [&](double tt, const std::vector<double>& yy, std::vector<double>& out) {
                point[static_cast<std::size_t>(u)] = tt;
                rhs(u, point, yy, out);
            };
            eval(t, y, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
            eval(t + 0.5 * h, tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
            eval(t + 0.5 * h, tmp, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
            eval(t + h, tmp, k4);
            for (std::size_t i = 0; i < n; ++i)
                y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(y[i])) {
                    diagnostic = "non-finite value for unknown " + std::to_string(i + 1) +
                                 " while moving axis " + std::to_string(u + 1) + " (step " +
                                 std::to_string(step + 1) + " of " + std::to_string(steps) + ")";
                    return false;
                }
            }
        }
        point[static_cast<std::size_t>(u)] = target;
    }
    return true;
}

inline void validate_path_args(int k, std::size_t n, const std::vector<double>& C,
                               const std::vector<double>& x, int steps,
                               const std::vector<int>& order) {
    if (C.size() != n) throw UsageError("initial value C must have one entry per unknown");
    if (static_cast<int>(x.size()) != k)
        throw UsageError("target point must have one entry per variable");
    if (steps < 1) throw UsageError("steps must be >= 1");
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < k; ++i)
        if (static_cast<int>(sorted.size()) != k || sorted[static_cast<std::size_t>(i)] != i)
            throw UsageError("axis order must be a permutation of the variable axes");
}

template <class Rhs>
PathIntegrationResult run_path(int k, const std::vector<double>& C, const std::vector<double>& x,
                               int steps, std::vector<int> order, const Rhs& rhs) {
    PathIntegrationResult res;
    res.axis_order = order;
    res.steps_per_segment = steps;
    std::string diag;
    if (!rk4_axis_path(k, C, x, steps, order, rhs, res.y, diag)) {
        res.ok = false;
        res.diagnostic = diag;
        return res;
    }
    std::vector<double> coarse;
    int half = std::max(1, steps / 2);
    if (!rk4_axis_path(k, C, x, half, order, rhs, coarse, diag)) {
        res.ok = false;
        res.diagnostic = diag + " (half-resolution error estimate)";
        return res;
    }
    for (std::size_t i = 0; i < res.y.size(); ++i)
        res.est_error = std::max(res.est_error, std::abs(res.y[i] - coarse[i]) / 15.0);
    return res;
}

}  // namespace oracle_detail

inline std::vector<int> identity_axis_order(int k) {
    std::vector<int> order(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    return order;
}

inline PathIntegrationResult path_integrate(const LinearSystem<double>& sys,
                                            const std::vector<double>& C,
                                            const std::vector<double>& x, int steps = 1000,
                                            std::vector<int> axis_order = {}) {
    if (axis_order.empty()) axis_order = identity_axis_order(sys.k());
    oracle_detail::validate_path_args(sys.k(), static_cast<std::size_t>(sys.n()), C, x, steps,
                                      axis_order);
    auto rhs = [&sys](int u, const std::vector<double>& pt, const std::vector<double>& y,
                      std::vector<double>& dy) {
        for (int r = 0; r < sys.n(); ++r) {
            double acc = 0.0;
            for (int s = 0; s < sys.n(); ++s) {
                const auto& f = sys.coeff(r, s, u);
                if (!f.terms().empty()) acc += f.evaluate(pt) * y[static_cast<std::size_t>(s)];
            }
            dy[static_cast<std::size_t>(r)] = -acc;
        }
    };
    return oracle_detail::run_path(sys.k(), C, x, steps, std::move(axis_order), rhs);
}

inline PathIntegrationResult path_integrate(const NonlinearSystem<double>& sys,
                                            const std::vector<double>& C,
                                            const std::vector<double>& x, int steps = 1000,
                                            std::vector<int> axis_order = {}) {
    if (axis_order.empty()) axis_order = identity_axis_order(sys.k());
    oracle_detail::validate_path_args(sys.k(), static_cast<std::size_t>(sys.n()), C, x, steps,
                                      axis_order);
    auto rhs = [&sys](int u, const std::vector<double>& pt, const std::vector<double>& y,
                      std::vector<double>& dy) {
        for (int r = 0; r < sys.n(); ++r) {
            double acc = 0.0;
            for (const auto& alpha : sys.support()) {
                const auto& f = sys.coeff(r, alpha, u);
                if (f.terms().empty()) continue;
                double mono = 1.0;
                for (int s = 0; s < sys.n(); ++s)
                    if (alpha.at(s) != 0)
                        mono *= oracle_detail::ipow(y[static_cast<std::size_t>(s)], alpha.at(s));
                acc += f.evaluate(pt) * mono;
            }
            dy[static_cast<std::size_t>(r)] = -acc;
        }
    };
    return oracle_detail::run_path(sys.k(), C, x, steps, std::move(axis_order), rhs);
}

// ---------------------------------------------------------------------------
// Series-vs-integration comparison with axis-permutation spread
// ---------------------------------------------------------------------------

struct CrossValidation {
    std::vector<double> series_value;  // truncated-series evaluation at x
    std::vector<double> path_value;    // integration along the canonical axis order
    double max_series_gap = 0.0;       // max over unknowns |series - canonical path|
    double permutation_spread = 0.0;   // max over unknowns (max - min across all k! orders)
    int permutations = 0;
    double est_error = 0.0;  // largest single-path error estimate
    bool ok = true;
    std::string diagnostic;
};

namespace oracle_detail {

template <class SeriesEval, class PathRun>
CrossValidation run_cross_validation(int k, const SeriesEval& series_eval,
                                     const PathRun& path_run) {
    CrossValidation cv;
    cv.series_value = series_eval();

    std::vector<int> order = identity_axis_order(k);
    std::vector<std::vector<double>> endpoints;
    do {
        PathIntegrationResult leg = path_run(order);
        if (!leg.ok) {
            cv.ok = false;
            cv.diagnostic = leg.diagnostic;
            return cv;
        }
        if (endpoints.empty()) {
            cv.path_value = leg.y;  // first permutation is the canonical order
        }
        cv.est_error = std::max(cv.est_error, leg.est_error);
        endpoints.push_back(std::move(leg.y));
    } while (std::next_permutation(order.begin(), order.end()));
    cv.permutations = static_cast<int>(endpoints.size());

    for (std::size_t r = 0; r < cv.series_value.size(); ++r) {
        cv.max_series_gap =
            std::max(cv.max_series_gap, std::abs(cv.series_value[r] - cv.path_value[r]));
        double lo = endpoints[0][r], hi = endpoints[0][r];
        for (const auto& e : endpoints) {
            lo = std::min(lo, e[r]);
            hi = std::max(hi, e[r]);
        }
        cv.permutation_spread = std::max(cv.permutation_spread, hi - lo);
    }
    return cv;
}

}  // namespace oracle_detail

// The truncated series is built along the canonical route even when the
// system fails the compatibility check, so this also works as an empirical
// integrability probe: permuted integration paths agree only when the mixed
// coefficients are path-independent.
inline CrossValidation cross_validate(const LinearSystem<double>& sys,
                                      const std::vector<double>& C, const std::vector<double>& x,
                                      int order, int steps = 1000) {
    PropagatorOptions opts;
    opts.allow_non_integrable = true;
    PropagatorTable<double> table(sys, order, opts);
    LinearSolution<double> sol = solve_linear_with_table(sys, table, C, order);
    return oracle_detail::run_cross_validation(
        sys.k(), [&] { return sol.evaluate(x); },
        [&](const std::vector<int>& perm) { return path_integrate(sys, C, x, steps, perm); });
}

inline CrossValidation cross_validate(const NonlinearSystem<double>& sys,
                                      const LaurentWindow& window, const std::vector<double>& C,
                                      const std::vector<double>& x, int order, int steps = 1000) {
    LiftedPropagatorTable<double> table = lifted_propagators(sys, window, order);
    NonlinearSolution<double> sol = solve_nonlinear_with_table(sys, table, C, order);
    return oracle_detail::run_cross_validation(
        sys.k(), [&] { return sol.evaluate(x); },
        [&](const std::vector<int>& perm) { return path_integrate(sys, C, x, steps, perm); });
}

}  // namespace pdeseries
