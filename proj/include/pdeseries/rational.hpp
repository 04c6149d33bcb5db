#pragma once

#include <gmpxx.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "pdeseries/errors.hpp"

namespace pdeseries {

// Exact rational scalar backed by GMP.  Values are always canonical:
// lowest terms, positive denominator.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long n) : v_(static_cast<signed long>(n)) {}  // implicit: small integer literals
    Rational(long num, long den) {
        if (den == 0) throw UsageError("rational with zero denominator");
        v_ = mpq_class(mpz_class(num), mpz_class(den));
        v_.canonicalize();
    }
    explicit Rational(mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }

    // Accepts "p", "p/q" and plain decimals like "-0.25" (read exactly).
    // Returns nullopt on any syntax error; the whole string must be consumed.
    static std::optional<Rational> parse(std::string_view text) {
        std::size_t i = 0;
        auto digits = [&](std::string& out) {
            std::size_t start = i;
            while (i < text.size() && text[i] >= '0' && text[i] <= '9') out += text[i++];
            return i > start;
        };
        std::string num;
        // mpz rejects a leading '+', so record only the '-' sign.
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            if (text[i] == '-') num += '-';
            ++i;
        }
        if (!digits(num)) return std::nullopt;
        if (i < text.size() && text[i] == '/') {
            ++i;
            std::string den;
            if (!digits(den) || i != text.size()) return std::nullopt;
            mpz_class d(den);
            if (d == 0) return std::nullopt;
            mpq_class q(mpz_class(num), d);
            q.canonicalize();
            return Rational(std::move(q));
        }
        if (i < text.size() && text[i] == '.') {
            ++i;
            std::string frac;
            if (!digits(frac) || i != text.size()) return std::nullopt;
            mpz_class scale = 1;
            for (std::size_t j = 0; j < frac.size(); ++j) scale *= 10;
            bool neg = !num.empty() && num[0] == '-';
            std::string whole = (num[0] == '+' || num[0] == '-') ? num.substr(1) : num;
            mpz_class p = mpz_class(whole) * scale + mpz_class(frac);
            if (neg) p = -p;
            mpq_class q(p, scale);
            q.canonicalize();
            return Rational(std::move(q));
        }
        if (i != text.size()) return std::nullopt;
        return Rational(mpq_class(mpz_class(num)));
    }

    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational operator+(const Rational& o) const { return Rational(mpq_class(v_ + o.v_)); }
    Rational operator-(const Rational& o) const { return Rational(mpq_class(v_ - o.v_)); }
    Rational operator*(const Rational& o) const { return Rational(mpq_class(v_ * o.v_)); }
    Rational operator/(const Rational& o) const {
        if (o.is_zero()) throw UsageError("rational division by zero");
        return Rational(mpq_class(v_ / o.v_));
    }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    bool operator==(const Rational& o) const { return v_ == o.v_; }
    bool operator!=(const Rational& o) const { return v_ != o.v_; }
    bool operator<(const Rational& o) const { return v_ < o.v_; }

    bool is_zero() const { return sgn(v_) == 0; }
    std::string str() const { return v_.get_str(); }  // "p" or "p/q"
    double to_double() const { return v_.get_d(); }
    const mpq_class& raw() const { return v_; }

private:
    mpq_class v_;
};

// Uniform interface over the two supported coefficient fields.  One
// computation always runs in a single field; there is no mixed arithmetic
// (enforced at compile time by the template parameter).
template <class R>
struct FieldTraits;

template <>
struct FieldTraits<Rational> {
    static constexpr bool exact = true;
    static const char* name() { return "rational"; }
    static Rational from_int(long n) { return Rational(n); }
    static Rational ratio(long num, long den) { return Rational(num, den); }
    static Rational div(const Rational& a, const Rational& b) { return a / b; }
    // Exact field: the tolerance argument is ignored.
    static bool is_zero(const Rational& v, double) { return v.is_zero(); }
    static std::string str(const Rational& v) { return v.str(); }
    static double to_double(const Rational& v) { return v.to_double(); }
    static double abs_double(const Rational& v) { return std::fabs(v.to_double()); }
    static std::optional<Rational> parse(std::string_view t) { return Rational::parse(t); }
};

template <>
struct FieldTraits<double> {
    static constexpr bool exact = false;
    static const char* name() { return "float"; }
    static double from_int(long n) { return static_cast<double>(n); }
    static double ratio(long num, long den) {
        if (den == 0) throw UsageError("rational with zero denominator");
        return static_cast<double>(num) / static_cast<double>(den);
    }
    static double div(double a, double b) {
        if (b == 0.0) throw UsageError("float division by zero");
        return a / b;
    }
    static bool is_zero(double v, double tol) { return std::fabs(v) <= tol; }
    // Shortest representation that round-trips exactly.
    static std::string str(double v) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    }
    static double to_double(double v) { return v; }
    static double abs_double(double v) { return std::fabs(v); }
    // Accepts everything the exact parser does, plus scientific notation.
    // Decimals go through strtod so they round to nearest; mpq_get_d
    // truncates, which would shift "0.2" by one ulp.
    static std::optional<double> parse(std::string_view t) {
        std::string s(t);
        if (s.find('/') != std::string::npos) {
            if (auto q = Rational::parse(s)) return q->to_double();
            return std::nullopt;
        }
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    }
};

template <class R>
R field_factorial(int n) {
    R acc = FieldTraits<R>::from_int(1);
    for (int i = 2; i <= n; ++i) acc = acc * FieldTraits<R>::from_int(i);
    return acc;
}

// Integer power with negative exponents allowed for invertible values.
template <class R>
R field_pow(const R& base, long e) {
    if (e < 0) {
        if (FieldTraits<R>::is_zero(base, 0.0))
            throw UsageError("negative power of zero");
        return field_pow(FieldTraits<R>::div(FieldTraits<R>::from_int(1), base), -e);
    }
    R acc = FieldTraits<R>::from_int(1);
    for (long i = 0; i < e; ++i) acc = acc * base;
    return acc;
}

// Binomial coefficient as a field value.
template <class R>
R field_binomial(int n, int m) {
    if (m < 0 || m > n) return FieldTraits<R>::from_int(0);
    R acc = FieldTraits<R>::from_int(1);
    for (int i = 1; i <= m; ++i)
        acc = FieldTraits<R>::div(acc * FieldTraits<R>::from_int(n - m + i),
                                  FieldTraits<R>::from_int(i));
    return acc;
}

}  // namespace pdeseries
