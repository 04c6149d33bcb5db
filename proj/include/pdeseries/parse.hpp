#pragma once

#include <limits>
#include <string>
#include <string_view>

#include "pdeseries/series.hpp"

namespace pdeseries {

template <class R>
struct ParsedPolynomial {
    PowerSeries<R> series;
    bool truncated = false;  // true if terms above the target order were dropped
};

// Recursive-descent parser for the polynomial input grammar (version 1):
//
//   expr     := sign? term (('+'|'-') term)*
//   term     := factor ('*' factor)*
//   factor   := base ('^' nat)?
//   base     := rational | var | '(' expr ')'
//   var      := 'x' nat                     (1-based variable number)
//   rational := sign? nat ('/' nat)? | sign? nat '.' nat
//   sign     := '+' | '-'
//
// Whitespace is allowed between tokens.  Implicit multiplication is not:
// write 3*x1, not 3x1.  Exponents are non-negative integers.  Parsing is
// exact; the polynomial is computed without truncation and only cut down to
// the requested order at the end, with the dropped-terms fact reported.
template <class R>
class PolynomialParser {
public:
    PolynomialParser(std::string_view text, int num_vars)
        : text_(text), nvars_(num_vars) {}

    ParsedPolynomial<R> run(int order) {
        skip_ws();
        PowerSeries<R> value = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        ParsedPolynomial<R> out{value.truncated(order), false};
        int true_degree = 0;
        for (const auto& [m, c] : value.terms()) true_degree = std::max(true_degree, m.total());
        out.truncated = true_degree > order;
        return out;
    }

private:
    // All intermediate arithmetic runs at an effectively unbounded order so
    // no cancellation information is lost before the final truncation.
    static constexpr int kExactOrder = std::numeric_limits<int>::max() / 4;

    PowerSeries<R> parse_expr() {
        bool negate = false;
        skip_ws();
        if (peek() == '+' || peek() == '-') negate = take() == '-';
        PowerSeries<R> acc = parse_term();
        if (negate) acc = -acc;
        for (;;) {
            skip_ws();
            char c = peek();
            if (c != '+' && c != '-') break;
            take();
            PowerSeries<R> t = parse_term();
            acc = (c == '+') ? acc + t : acc - t;
        }
        return acc;
    }

    PowerSeries<R> parse_term() {
        PowerSeries<R> acc = parse_factor();
        for (;;) {
            skip_ws();
            if (peek() != '*') break;
            take();
            acc = acc * parse_factor();
        }
        return acc;
    }

    PowerSeries<R> parse_factor() {
        PowerSeries<R> base = parse_base();
        skip_ws();
        if (peek() == '^') {
            take();
            skip_ws();
            std::size_t at = pos_;
            long e = parse_nat("exponent");
            if (e > 1000) throw ParseError("exponent too large (limit 1000)", at);
            PowerSeries<R> acc =
                PowerSeries<R>::constant(nvars_, kExactOrder, FieldTraits<R>::from_int(1));
            for (long i = 0; i < e; ++i) acc = acc * base;
            return acc;
        }
        return base;
    }

    PowerSeries<R> parse_base() {
        skip_ws();
        char c = peek();
        if (c == '(') {
            take();
            PowerSeries<R> inner = parse_expr();
            skip_ws();
            if (peek() != ')') throw ParseError("expected ')'", pos_);
            take();
            return inner;
        }
        if (c == 'x') {
            std::size_t at = pos_;
            take();
            long idx = parse_nat("variable number");
            if (idx < 1 || idx > nvars_)
                throw ParseError("variable x" + std::to_string(idx) + " out of range (have " +
                                     std::to_string(nvars_) + " variables)",
                                 at);
            return PowerSeries<R>::monomial(nvars_, kExactOrder,
                                            MultiIndex::unit(nvars_, static_cast<int>(idx) - 1),
                                            FieldTraits<R>::from_int(1));
        }
        if (c == '+' || c == '-' || (c >= '0' && c <= '9')) return parse_number();
        throw ParseError("expected number, variable or '('", pos_);
    }

    PowerSeries<R> parse_number() {
        std::size_t start = pos_;
        if (peek() == '+' || peek() == '-') take();
        while (is_digit(peek())) take();
        if (peek() == '/' || peek() == '.') {
            take();
            while (is_digit(peek())) take();
        }
        std::string_view lit = text_.substr(start, pos_ - start);
        auto v = FieldTraits<R>::parse(lit);
        if (!v) throw ParseError("bad numeric literal '" + std::string(lit) + "'", start);
        return PowerSeries<R>::constant(nvars_, kExactOrder, *v);
    }

    long parse_nat(const std::string& what) {
        std::size_t start = pos_;
        while (is_digit(peek())) take();
        if (pos_ == start) throw ParseError("expected " + what, start);
        std::string digits(text_.substr(start, pos_ - start));
        if (digits.size() > 6) throw ParseError(what + " too large", start);
        return std::stol(digits);
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    char take() { return text_[pos_++]; }
    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    std::string_view text_;
    int nvars_;
    std::size_t pos_ = 0;
};

// Parses `text` as a polynomial in x1..x<num_vars> and returns it as a series
// valid to `order`.  Throws ParseError (with character offset) on bad syntax.
template <class R>
ParsedPolynomial<R> parse_polynomial(std::string_view text, int num_vars, int order) {
    if (num_vars < 1) throw UsageError("parse_polynomial needs at least one variable");
    if (order < 0) throw UsageError("parse_polynomial needs a non-negative order");
    return PolynomialParser<R>(text, num_vars).run(order);
}

}  // namespace pdeseries
