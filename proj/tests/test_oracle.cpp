#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <pdeseries/oracle.hpp>
#include <pdeseries/parse.hpp>

using namespace pdeseries;

using QSeries = PowerSeries<Rational>;

namespace {

Rational q(long num, long den = 1) { return Rational(num, den); }

MultiIndex mi(std::vector<int> e) { return MultiIndex(std::move(e)); }

ExponentVector ev(std::vector<int> e) { return ExponentVector(std::move(e)); }

template <class R>
void set_poly(LinearSystem<R>& sys, int r, int s, int u, const char* text) {
    sys.set_coeff(r, s, u, parse_polynomial<R>(text, sys.k(), sys.order()).series);
}

template <class R>
void set_poly(NonlinearSystem<R>& sys, int r, std::vector<int> alpha, int u, const char* text) {
    sys.set_coeff(r, ev(std::move(alpha)), u,
                  parse_polynomial<R>(text, sys.k(), sys.order()).series);
}

LinearSystem<Rational> exp_xy_system(int order = 10) {
    LinearSystem<Rational> sys(1, 2, order);
    set_poly(sys, 0, 0, 0, "x2");
    set_poly(sys, 0, 0, 1, "x1");
    return sys;
}

LinearSystem<Rational> noncommuting_system(int order = 6) {
    LinearSystem<Rational> sys(2, 2, order);
    set_poly(sys, 0, 1, 0, "1");
    set_poly(sys, 1, 0, 1, "1");
    return sys;
}

NonlinearSystem<Rational> riccati_system(int order = 12) {
    NonlinearSystem<Rational> sys(1, 1, order);
    set_poly(sys, 0, {2}, 0, "1");
    return sys;
}

}  // namespace

TEST_CASE("residuals of a correct linear solution vanish identically") {
    LinearSystem<Rational> sys = exp_xy_system(10);
    LinearSolution<Rational> sol = solve_linear(sys, {q(1)}, 10);
    ResidualReport<Rational> rep = residual_linear(sys, sol);
    CHECK(rep.pass);
    CHECK(rep.checked_degree == 9);  // one degree consumed by the derivative
    CHECK(!rep.witness.has_value());
    REQUIRE(rep.entries.size() == 2);  // one per (unknown, axis) pair
    for (const auto& e : rep.entries) CHECK(e.residual.is_zero());
}

TEST_CASE("a corrupted coefficient is caught and localized") {
    LinearSystem<Rational> sys = exp_xy_system(10);
    LinearSolution<Rational> sol = solve_linear(sys, {q(1)}, 10);
    sol.y[0].set_coeff(mi({2, 1}), sol.y[0].coeff(mi({2, 1})) + q(1, 7));

    ResidualReport<Rational> rep = residual_linear(sys, sol.y);
    CHECK(!rep.pass);
    REQUIRE(rep.witness.has_value());
    CHECK(rep.witness->r == 1);
    CHECK(rep.witness->u == 1);
    CHECK(rep.witness->position == std::vector<int>{1, 1});  // d/dx1 of x1^2 x2 / 7
    CHECK(rep.witness->value == "2/7");
    CHECK(rep.witness->str() ==
          "residual for unknown 1, axis 1 has coefficient 2/7 at x^(1,1)");
}

TEST_CASE("residuals of a wrong nonlinear candidate expose the equation") {
    NonlinearSystem<Rational> sys = riccati_system(12);
    // y identically C is not a solution: the residual is exactly C^2.
    std::vector<QSeries> constant{QSeries::constant(1, 12, q(1, 2))};
    ResidualReport<Rational> rep = residual_nonlinear(sys, constant);
    CHECK(!rep.pass);
    REQUIRE(rep.witness.has_value());
    CHECK(rep.witness->r == 1);
    CHECK(rep.witness->u == 1);
    CHECK(rep.witness->position == std::vector<int>{0});
    CHECK(rep.witness->value == "1/4");

    // The genuine solution passes.
    NonlinearSolution<Rational> sol =
        solve_nonlinear(sys, auto_window(sys, 12), {q(1, 2)}, 12);
    ResidualReport<Rational> ok = residual_nonlinear(sys, sol);
    CHECK(ok.pass);
    CHECK(ok.checked_degree == 11);
}

TEST_CASE("independent coefficient recursion matches the transport solver") {
    LinearSystem<Rational> sys = exp_xy_system(10);
    LinearSolution<Rational> sol = solve_linear(sys, {q(1)}, 10);
    TaylorOracleResult<Rational> oracle = taylor_oracle_linear(sys, {q(1)}, 10);
    CHECK(oracle.consistent);
    REQUIRE(oracle.y.size() == 1);
    CHECK(series_equal_to_order(oracle.y[0], sol.y[0], 10));

    // And on a two-unknown compatible system with constant equal matrices.
    LinearSystem<Rational> same(2, 2, 8);
    set_poly(same, 0, 1, 0, "1");
    set_poly(same, 1, 0, 0, "1");
    set_poly(same, 0, 1, 1, "1");
    set_poly(same, 1, 0, 1, "1");
    LinearSolution<Rational> sol2 = solve_linear(same, {q(2), q(-3)}, 8);
    TaylorOracleResult<Rational> oracle2 = taylor_oracle_linear(same, {q(2), q(-3)}, 8);
    CHECK(oracle2.consistent);
    for (int r = 0; r < 2; ++r) CHECK(series_equal_to_order(oracle2.y[r], sol2.y[r], 8));
}

TEST_CASE("the coefficient recursion detects path dependence") {
    LinearSystem<Rational> sys = noncommuting_system(6);
    TaylorOracleResult<Rational> oracle = taylor_oracle_linear(sys, {q(1), q(1)}, 6);
    CHECK(!oracle.consistent);
    REQUIRE(oracle.witness.has_value());
    CHECK(oracle.witness->r == 1);
    CHECK(oracle.witness->position == std::vector<int>{1, 1});
    CHECK(oracle.witness->axis_a == 1);
    CHECK(oracle.witness->axis_b == 2);
    CHECK(oracle.witness->value_a == "1");
    CHECK(oracle.witness->value_b == "0");
}

TEST_CASE("nonlinear coefficient recursion matches the lifted solver") {
    NonlinearSystem<Rational> sys = riccati_system(12);
    NonlinearSolution<Rational> sol =
        solve_nonlinear(sys, auto_window(sys, 12), {q(1, 2)}, 12);
    TaylorOracleResult<Rational> oracle = taylor_oracle_nonlinear(sys, {q(1, 2)}, 12);
    CHECK(oracle.consistent);
    CHECK(series_equal_to_order(oracle.y[0], sol.series_with_C(0), 12));

    // Laurent support: y' = -1/y from y(0) = 2.
    NonlinearSystem<Rational> lsys(1, 1, 8);
    set_poly(lsys, 0, {-1}, 0, "1");
    LaurentWindow w;
    w.lo = {-21};
    w.hi = {2};
    NonlinearSolution<Rational> lsol = solve_nonlinear(lsys, w, {q(2)}, 8);
    TaylorOracleResult<Rational> loracle = taylor_oracle_nonlinear(lsys, {q(2)}, 8);
    CHECK(loracle.consistent);
    CHECK(series_equal_to_order(loracle.y[0], lsol.series_with_C(0), 8));
    CHECK_THROWS_AS(taylor_oracle_nonlinear(lsys, {q(0)}, 8), UsageError);
}

TEST_CASE("nonlinear coefficient recursion flags incompatible pairs") {
    NonlinearSystem<Rational> sys(1, 2, 8);
    set_poly(sys, 0, {1}, 0, "1");
    set_poly(sys, 0, {2}, 1, "1");
    TaylorOracleResult<Rational> oracle = taylor_oracle_nonlinear(sys, {q(1)}, 8);
    CHECK(!oracle.consistent);
    REQUIRE(oracle.witness.has_value());
    CHECK(oracle.witness->value_a != oracle.witness->value_b);
}

TEST_CASE("numeric path integration reproduces closed forms") {
    LinearSystem<double> sys(1, 1, 4);
    set_poly(sys, 0, 0, 0, "2");  // y' = -2y, y(0.5) = exp(-1)
    PathIntegrationResult res = path_integrate(sys, {1.0}, {0.5});
    REQUIRE(res.ok);
    CHECK(res.steps_per_segment == 1000);
    CHECK(res.method_order == 4);
    CHECK(res.axis_order == std::vector<int>{0});
    CHECK(std::abs(res.y[0] - std::exp(-1.0)) < 1e-9);
    CHECK(res.est_error < 1e-9);

    NonlinearSystem<double> ric(1, 1, 4);
    set_poly(ric, 0, {2}, 0, "1");  // y' = -y^2, y = C/(1+Cx)
    PathIntegrationResult rres = path_integrate(ric, {0.5}, {0.1});
    REQUIRE(rres.ok);
    CHECK(std::abs(rres.y[0] - 10.0 / 21.0) < 1e-9);
}

TEST_CASE("path integration at the origin returns the initial value exactly") {
    LinearSystem<double> sys(1, 2, 4);
    set_poly(sys, 0, 0, 0, "x2");
    set_poly(sys, 0, 0, 1, "x1");
    PathIntegrationResult res = path_integrate(sys, {0.75}, {0.0, 0.0});
    REQUIRE(res.ok);
    CHECK(res.y[0] == 0.75);
    CHECK(res.est_error == 0.0);
}

TEST_CASE("path integration validates its arguments") {
    LinearSystem<double> sys(1, 2, 4);
    CHECK_THROWS_AS(path_integrate(sys, {1.0, 2.0}, {0.1, 0.1}), UsageError);
    CHECK_THROWS_AS(path_integrate(sys, {1.0}, {0.1}), UsageError);
    CHECK_THROWS_AS(path_integrate(sys, {1.0}, {0.1, 0.1}, 0), UsageError);
    CHECK_THROWS_AS(path_integrate(sys, {1.0}, {0.1, 0.1}, 10, {0, 0}), UsageError);
    CHECK_THROWS_AS(path_integrate(sys, {1.0}, {0.1, 0.1}, 10, {1, 2}), UsageError);
}

TEST_CASE("series and integration agree on a compatible system") {
    LinearSystem<double> sys(1, 2, 10);
    set_poly(sys, 0, 0, 0, "x2");
    set_poly(sys, 0, 0, 1, "x1");
    CrossValidation cv = cross_validate(sys, {1.0}, {0.2, 0.3}, 10);
    REQUIRE(cv.ok);
    CHECK(cv.permutations == 2);
    CHECK(std::abs(cv.series_value[0] - std::exp(-0.06)) < 1e-9);
    CHECK(cv.max_series_gap < 1e-6);
    CHECK(cv.permutation_spread < 1e-8);
    CHECK(cv.est_error < 1e-9);
}

TEST_CASE("permutation spread exposes path dependence") {
    LinearSystem<double> sys(2, 2, 6);
    set_poly(sys, 0, 1, 0, "1");
    set_poly(sys, 1, 0, 1, "1");
    CrossValidation cv = cross_validate(sys, {1.0, 1.0}, {0.3, 0.3}, 6);
    REQUIRE(cv.ok);
    CHECK(cv.permutation_spread > 1e-4);  // genuinely different endpoints

    // The spread converges to a nonzero constant as steps grow.
    CrossValidation fine = cross_validate(sys, {1.0, 1.0}, {0.3, 0.3}, 6, 2000);
    CHECK(fine.permutation_spread > 1e-4);
    CHECK(std::abs(fine.permutation_spread - cv.permutation_spread) <
          0.01 * cv.permutation_spread);
}

TEST_CASE("on compatible systems the spread is pure integrator error") {
    // Fourth-order stepping: halving the step size shrinks the spread by
    // roughly 2^4; a factor of at least 10 distinguishes it from a genuine
    // path dependence, which would not shrink at all.
    LinearSystem<double> sys(1, 2, 8);
    set_poly(sys, 0, 0, 0, "1+x2");
    set_poly(sys, 0, 0, 1, "x1");
    REQUIRE(is_integrable(sys).integrable);
    CrossValidation coarse = cross_validate(sys, {1.0}, {0.8, 0.6}, 8, 6);
    CrossValidation fine = cross_validate(sys, {1.0}, {0.8, 0.6}, 8, 12);
    REQUIRE(coarse.ok);
    REQUIRE(fine.ok);
    CHECK(coarse.permutation_spread > 0.0);
    CHECK(fine.permutation_spread > 0.0);
    CHECK(coarse.permutation_spread / fine.permutation_spread > 10.0);
}

TEST_CASE("rational data converts cleanly for the numeric layer") {
    LinearSystem<Rational> sys = exp_xy_system(6);
    LinearSystem<double> dsys = to_double(sys);
    CHECK(dsys.n() == 1);
    CHECK(dsys.k() == 2);
    CHECK(dsys.order() == 6);
    CHECK(dsys.coeff(0, 0, 0).coeff(mi({0, 1})) == 1.0);
    CHECK(to_double(std::vector<Rational>{q(1, 2), q(-3)}) ==
          std::vector<double>{0.5, -3.0});

    NonlinearSystem<Rational> ric = riccati_system(6);
    NonlinearSystem<double> dric = to_double(ric);
    CHECK(dric.support().size() == 1);
    CHECK(dric.coeff(0, ev({2}), 0).coeff(mi({0})) == 1.0);
}

TEST_CASE("nonlinear cross validation ties all layers together") {
    NonlinearSystem<Rational> ric = riccati_system(12);
    NonlinearSystem<double> dsys = to_double(ric);
    CrossValidation cv =
        cross_validate(dsys, auto_window(dsys, 12), {0.5}, {0.1}, 12);
    REQUIRE(cv.ok);
    CHECK(std::abs(cv.series_value[0] - 10.0 / 21.0) < 1e-9);
    CHECK(cv.max_series_gap < 1e-6);
}

TEST_CASE("oracle argument validation") {
    LinearSystem<Rational> sys = exp_xy_system(6);
    CHECK_THROWS_AS(taylor_oracle_linear(sys, {q(1), q(2)}, 6), UsageError);
    CHECK_THROWS_AS(taylor_oracle_linear(sys, {q(1)}, 7), InsufficientOrderError);
    CHECK_THROWS_AS(residual_linear(sys, std::vector<QSeries>{}), UsageError);
}
