#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <pdeseries/multiindex.hpp>
#include <pdeseries/parse.hpp>
#include <pdeseries/rational.hpp>
#include <pdeseries/series.hpp>

using namespace pdeseries;

using QSeries = PowerSeries<Rational>;
using DSeries = PowerSeries<double>;

namespace {

Rational q(long num, long den = 1) { return Rational(num, den); }

MultiIndex mi(std::vector<int> e) { return MultiIndex(std::move(e)); }

}  // namespace

TEST_CASE("rational parsing and arithmetic") {
    CHECK(Rational::parse("3/4")->str() == "3/4");
    CHECK(Rational::parse("-0.25")->str() == "-1/4");
    CHECK(Rational::parse("6/4")->str() == "3/2");      // canonical form
    CHECK(Rational::parse("-6/4")->str() == "-3/2");
    CHECK(Rational::parse("+7")->str() == "7");
    CHECK(!Rational::parse("1/0").has_value());
    CHECK(!Rational::parse("abc").has_value());
    CHECK(!Rational::parse("1.").has_value());
    CHECK(!Rational::parse("1/2/3").has_value());
    CHECK(!Rational::parse("1e3").has_value());  // exact grammar has no exponents
    CHECK(!Rational::parse("").has_value());

    CHECK((q(1, 2) + q(1, 3)).str() == "5/6");
    CHECK((q(1, 2) * q(2, 3)).str() == "1/3");
    CHECK((q(1, 2) - q(1, 2)).is_zero());
    CHECK_THROWS_AS(q(1) / q(0), UsageError);
    CHECK_THROWS_AS(Rational(1, 0), UsageError);
    CHECK(q(-3, -6).str() == "1/2");  // positive denominator enforced
}

TEST_CASE("float field parsing rounds to nearest") {
    auto p = FieldTraits<double>::parse("0.2");
    REQUIRE(p.has_value());
    CHECK(FieldTraits<double>::str(*p) == "0.2");  // shortest round-trip form
    CHECK(*FieldTraits<double>::parse("1e-3") == 0.001);
    CHECK(*FieldTraits<double>::parse("1/2") == 0.5);
    CHECK(!FieldTraits<double>::parse("inf").has_value());
    CHECK(!FieldTraits<double>::parse("nan").has_value());
    CHECK(!FieldTraits<double>::parse("").has_value());
}

TEST_CASE("field helpers") {
    CHECK(field_factorial<Rational>(5) == q(120));
    CHECK(field_factorial<Rational>(0) == q(1));
    CHECK(field_pow(q(2, 3), 3) == q(8, 27));
    CHECK(field_pow(q(2), -2) == q(1, 4));
    CHECK_THROWS_AS(field_pow(q(0), -1), UsageError);
    CHECK(field_binomial<Rational>(5, 2) == q(10));
    CHECK(field_binomial<Rational>(3, 5) == q(0));
    CHECK(field_binomial<Rational>(3, -1) == q(0));
}

TEST_CASE("multi-index basics and ordering") {
    MultiIndex a = mi({2, 0, 1});
    CHECK(a.total() == 3);
    CHECK(a.size() == 3);
    CHECK(a.at(0) == 2);
    CHECK(a.str() == "(2,0,1)");
    CHECK(a.plus_axis(1).entries() == std::vector<int>{2, 1, 1});
    CHECK(a.minus_axis(0).entries() == std::vector<int>{1, 0, 1});
    CHECK_THROWS_AS(mi({0, 0}).minus_axis(0), UsageError);
    CHECK(MultiIndex::zero(2).entries() == std::vector<int>{0, 0});
    CHECK(MultiIndex::unit(3, 1).entries() == std::vector<int>{0, 1, 0});
    CHECK(a.first_nonzero_axis() == 0);
    CHECK(mi({0, 0, 3}).first_nonzero_axis() == 2);
    CHECK(mi({1, 2}).componentwise_leq(mi({1, 3})));
    CHECK(!mi({2, 2}).componentwise_leq(mi({1, 3})));

    GradedLexLess less;
    CHECK(less(mi({0, 1}), mi({2, 0})));   // lower total degree first
    CHECK(less(mi({0, 2}), mi({1, 1})));   // same degree: lexicographic
    CHECK(!less(mi({1, 1}), mi({1, 1})));

    auto level2 = multi_indices_of_total(2, 2);
    REQUIRE(level2.size() == 3);
    CHECK(level2[0].entries() == std::vector<int>{0, 2});
    CHECK(level2[1].entries() == std::vector<int>{1, 1});
    CHECK(level2[2].entries() == std::vector<int>{2, 0});

    auto upto = multi_indices_up_to(2, 2);
    REQUIRE(upto.size() == 6);
    CHECK(upto.front().entries() == std::vector<int>{0, 0});
    CHECK(upto.back().entries() == std::vector<int>{2, 0});
    for (std::size_t i = 1; i < upto.size(); ++i) CHECK(less(upto[i - 1], upto[i]));
}

TEST_CASE("series construction and coefficient access") {
    QSeries s(2, 4);
    CHECK(s.num_vars() == 2);
    CHECK(s.order() == 4);
    CHECK(s.is_zero());
    s.set_coeff(mi({1, 2}), q(3, 7));
    CHECK(s.coeff(mi({1, 2})) == q(3, 7));
    CHECK(s.coeff(mi({0, 0})) == q(0));
    s.set_coeff(mi({1, 2}), q(0));  // writing zero erases the term
    CHECK(s.is_zero());
    CHECK_THROWS_AS(s.set_coeff(mi({3, 2}), q(1)), UsageError);  // above order
    CHECK_THROWS_AS(s.set_coeff(mi({1}), q(1)), UsageError);     // wrong arity
    CHECK_THROWS_AS(QSeries(0, 3), UsageError);
    CHECK_THROWS_AS(QSeries(1, -2), UsageError);

    QSeries c = QSeries::constant(3, 5, q(2));
    CHECK(c.coeff(MultiIndex::zero(3)) == q(2));
    QSeries m = QSeries::monomial(2, 5, mi({2, 1}), q(-1));
    CHECK(m.coeff(mi({2, 1})) == q(-1));
}

TEST_CASE("validity order bookkeeping") {
    QSeries a(1, 5), b(1, 3);
    a.set_coeff(mi({1}), q(1));
    b.set_coeff(mi({2}), q(1));
    CHECK((a + b).order() == 3);           // min of the operands
    CHECK((a * b).order() == 3);           // products cannot be trusted further
    CHECK(a.derivative(0).order() == 4);   // one degree is consumed
    CHECK(a.truncated(2).order() == 2);
    CHECK(a.truncated(9).order() == 5);    // truncation never raises validity

    // Shifting by x^w re-raises validity (bounded by the cap).
    QSeries shifted = b.shifted_scaled(mi({2}), q(1), 10);
    CHECK(shifted.order() == 5);
    CHECK(shifted.coeff(mi({4})) == q(1));

    QSeries vac(1, -1);  // vacuous: no trusted coefficients at all
    CHECK((a + vac).order() == -1);
    CHECK(vac.derivative(0).order() == -1);
}

TEST_CASE("series arithmetic is exact") {
    // (1 - x1 + x2^2) * (1 + x1) = 1 + x2^2 - x1^2 + x1*x2^2
    QSeries a(2, 4), b(2, 4);
    a.set_coeff(mi({0, 0}), q(1));
    a.set_coeff(mi({1, 0}), q(-1));
    a.set_coeff(mi({0, 2}), q(1));
    b.set_coeff(mi({0, 0}), q(1));
    b.set_coeff(mi({1, 0}), q(1));
    QSeries p = a * b;
    CHECK(p.coeff(mi({0, 0})) == q(1));
    CHECK(p.coeff(mi({1, 0})) == q(0));
    CHECK(p.coeff(mi({0, 2})) == q(1));
    CHECK(p.coeff(mi({2, 0})) == q(-1));
    CHECK(p.coeff(mi({1, 2})) == q(1));

    QSeries d = p.derivative(0);
    CHECK(d.coeff(mi({1, 0})) == q(-2));
    CHECK(d.coeff(mi({0, 2})) == q(1));
    CHECK(d.order() == 3);

    CHECK((a - a).is_zero());
    CHECK((-a).coeff(mi({1, 0})) == q(1));
    CHECK(a.scaled(q(2)).coeff(mi({0, 2})) == q(2));
    CHECK(a.scaled(q(0)).is_zero());
}

TEST_CASE("series evaluation") {
    QSeries s(2, 3);
    s.set_coeff(mi({0, 0}), q(1));
    s.set_coeff(mi({1, 1}), q(-2));
    s.set_coeff(mi({2, 0}), q(1, 2));
    // at (1/2, 1/3): 1 - 2*(1/6) + (1/2)*(1/4) = 1 - 1/3 + 1/8 = 19/24
    CHECK(s.evaluate({q(1, 2), q(1, 3)}) == q(19, 24));
    CHECK_THROWS_AS(s.evaluate({q(1)}), UsageError);
}

TEST_CASE("reciprocal inverts the geometric series") {
    QSeries one_minus_x(1, 6);
    one_minus_x.set_coeff(mi({0}), q(1));
    one_minus_x.set_coeff(mi({1}), q(-1));
    QSeries inv = reciprocal(one_minus_x);
    for (int d = 0; d <= 6; ++d) CHECK(inv.coeff(mi({d})) == q(1));
    QSeries prod = one_minus_x * inv;
    CHECK(prod.coeff(mi({0})) == q(1));
    for (int d = 1; d <= 6; ++d) CHECK(prod.coeff(mi({d})) == q(0));

    QSeries no_constant(1, 3);
    no_constant.set_coeff(mi({1}), q(1));
    CHECK_THROWS_AS(reciprocal(no_constant), UsageError);
    CHECK_THROWS_AS(reciprocal(QSeries(1, -1)), UsageError);
}

TEST_CASE("integer powers including negative exponents") {
    QSeries base(2, 4);
    base.set_coeff(mi({0, 0}), q(1));
    base.set_coeff(mi({1, 0}), q(1));
    QSeries sq = pow_int(base, 2);
    CHECK(sq.coeff(mi({2, 0})) == q(1));
    CHECK(sq.coeff(mi({1, 0})) == q(2));
    QSeries neg = pow_int(base, -2);  // (1+x)^-2 = 1 - 2x + 3x^2 - 4x^3 ...
    CHECK(neg.coeff(mi({0, 0})) == q(1));
    CHECK(neg.coeff(mi({1, 0})) == q(-2));
    CHECK(neg.coeff(mi({2, 0})) == q(3));
    CHECK(neg.coeff(mi({3, 0})) == q(-4));
    CHECK(pow_int(base, 0).coeff(mi({0, 0})) == q(1));
}

TEST_CASE("series comparison to a given order") {
    QSeries a(1, 5), b(1, 5);
    a.set_coeff(mi({0}), q(1));
    b.set_coeff(mi({0}), q(1));
    b.set_coeff(mi({4}), q(1, 100));
    CHECK(series_equal_to_order(a, b, 3));
    CHECK(!series_equal_to_order(a, b, 4));

    DSeries fa(1, 5), fb(1, 5);
    fa.set_coeff(mi({1}), 1.0);
    fb.set_coeff(mi({1}), 1.0 + 1e-14);
    CHECK(series_equal_to_order(fa, fb, 5, 1e-12));
    CHECK(!series_equal_to_order(fa, fb, 5, 1e-16));
}

TEST_CASE("polynomial grammar accepts the documented forms") {
    auto p = parse_polynomial<Rational>("x1^2*x2 - 1/2", 2, 5);
    CHECK(!p.truncated);
    CHECK(p.series.coeff(mi({2, 1})) == q(1));
    CHECK(p.series.coeff(mi({0, 0})) == q(-1, 2));

    CHECK(parse_polynomial<Rational>("-x1", 1, 3).series.coeff(mi({1})) == q(-1));
    CHECK(parse_polynomial<Rational>("3*x1 + 2*x1", 1, 3).series.coeff(mi({1})) == q(5));
    CHECK(parse_polynomial<Rational>("(1 + x1)^3", 1, 5).series.coeff(mi({2})) == q(3));
    CHECK(parse_polynomial<Rational>("0.5*x1", 1, 2).series.coeff(mi({1})) == q(1, 2));
    CHECK(parse_polynomial<Rational>("2/3", 1, 0).series.coeff(mi({0})) == q(2, 3));
    CHECK(parse_polynomial<Rational>("x1 - x1", 1, 4).series.is_zero());
    CHECK(parse_polynomial<Rational>(" ( x1 + 1 ) * ( x1 - 1 ) ", 1, 4)
              .series.coeff(mi({2})) == q(1));

    // Exact cancellation above the target order must not poison the result.
    auto c = parse_polynomial<Rational>("(1 + x1)^4 - (1 + x1)^4", 1, 2);
    CHECK(c.series.is_zero());
    CHECK(!c.truncated);
}

TEST_CASE("polynomial grammar reports truncation") {
    auto p = parse_polynomial<Rational>("x1^5", 1, 3);
    CHECK(p.truncated);
    CHECK(p.series.is_zero());
    auto p2 = parse_polynomial<Rational>("1 + x1^2", 1, 3);
    CHECK(!p2.truncated);
}

TEST_CASE("polynomial grammar rejects bad input with positions") {
    auto offset_of = [](const char* text, int num_vars) -> std::size_t {
        try {
            parse_polynomial<Rational>(text, num_vars, 5);
        } catch (const ParseError& e) {
            return e.position;
        }
        return static_cast<std::size_t>(-1);
    };
    CHECK(offset_of("x1 + ", 1) == 5);       // dangling operator
    CHECK(offset_of("x3", 2) == 0);          // variable out of range
    CHECK(offset_of("x1 x1", 1) == 3);       // implicit product is not allowed
    CHECK(offset_of("x1^", 1) == 3);         // missing exponent
    CHECK(offset_of("(x1", 1) == 3);         // unclosed parenthesis
    CHECK(offset_of("x1^1001", 1) == 3);     // exponent cap
    CHECK_THROWS_AS(parse_polynomial<Rational>("x0", 1, 3), ParseError);
    CHECK_THROWS_AS(parse_polynomial<Rational>("", 1, 3), ParseError);
    CHECK_THROWS_AS(parse_polynomial<Rational>("x1", 0, 3), UsageError);
    CHECK_THROWS_AS(parse_polynomial<Rational>("x1", 1, -1), UsageError);

    try {
        parse_polynomial<Rational>("x9", 2, 5);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("x9") != std::string::npos);
        CHECK(std::string(e.what()).find("2 variables") != std::string::npos);
    }
}

TEST_CASE("polynomial grammar works over floats") {
    auto p = parse_polynomial<double>("0.5*x1^2 - 2*x2", 2, 4);
    CHECK(p.series.coeff(mi({2, 0})) == doctest::Approx(0.5));
    CHECK(p.series.coeff(mi({0, 1})) == doctest::Approx(-2.0));
}

TEST_CASE("max_abs_coeff tracks the largest magnitude") {
    QSeries s(1, 3);
    s.set_coeff(mi({0}), q(1, 2));
    s.set_coeff(mi({2}), q(-7, 2));
    CHECK(s.max_abs_coeff() == doctest::Approx(3.5));
    CHECK(QSeries(1, 3).max_abs_coeff() == 0.0);
}
