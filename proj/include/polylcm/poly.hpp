#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "polylcm/numeric.hpp"

namespace polylcm {

// Integer-coefficient polynomial with exact arbitrary-precision
// coefficients. Stored constant-term first; the leading coefficient is
// always nonzero (construction trims trailing zeros).
class IntPolynomial {
  public:
    IntPolynomial() = default; // zero polynomial

    explicit IntPolynomial(std::vector<mpz_class> coeffs) : coeffs_(std::move(coeffs)) {
        while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
    }

    static IntPolynomial from_ints(std::initializer_list<long> constant_first) {
        std::vector<mpz_class> c;
        c.reserve(constant_first.size());
        for (long v : constant_first) c.emplace_back(v);
        return IntPolynomial(std::move(c));
    }

    // Accepts either the human form ("x^3-x+7", "2x^2 + 3x - 5") or a
    // comma-separated coefficient list, constant term first ("7,-1,0,1").
    static IntPolynomial parse(const std::string& text);

    bool is_zero() const { return coeffs_.empty(); }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    const std::vector<mpz_class>& coeffs() const { return coeffs_; }

    const mpz_class& coeff(std::size_t i) const {
        static const mpz_class zero = 0;
        return i < coeffs_.size() ? coeffs_[i] : zero;
    }

    const mpz_class& leading() const {
        if (coeffs_.empty()) throw std::domain_error("zero polynomial has no leading coefficient");
        return coeffs_.back();
    }

    // Exact evaluation by Horner's rule.
    mpz_class operator()(const mpz_class& x) const {
        mpz_class acc = 0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) {
            acc *= x;
            acc += coeffs_[i];
        }
        return acc;
    }

    mpz_class operator()(std::uint64_t x) const { return (*this)(mpz_from_u64(x)); }

    IntPolynomial derivative() const {
        std::vector<mpz_class> d;
        for (std::size_t i = 1; i < coeffs_.size(); ++i) d.push_back(mpz_class(static_cast<unsigned long>(i)) * coeffs_[i]);
        return IntPolynomial(std::move(d));
    }

    mpz_class content() const {
        mpz_class g = 0;
        for (const auto& c : coeffs_) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
        return g;
    }

    mpz_class height() const {
        mpz_class h = 0;
        for (const auto& c : coeffs_) {
            mpz_class a = abs(c);
            if (a > h) h = a;
        }
        return h;
    }

    // Sum |a_i| N^i: an upper bound for |f(n)| on [0, N].
    mpz_class abs_value_bound(std::uint64_t N) const {
        mpz_class bound = 0, pw = 1, n = mpz_from_u64(N);
        for (const auto& c : coeffs_) {
            bound += abs(c) * pw;
            pw *= n;
        }
        return bound;
    }

    std::string str() const;

    bool operator==(const IntPolynomial& other) const { return coeffs_ == other.coeffs_; }

  private:
    std::vector<mpz_class> coeffs_;
};

namespace detail {

inline void parse_fail(const std::string& text, const char* why) {
    throw std::invalid_argument("cannot parse polynomial \"" + text + "\": " + why);
}

inline IntPolynomial parse_coeff_list(const std::string& text) {
    std::vector<mpz_class> coeffs;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) parse_fail(text, "empty coefficient in list");
        coeffs.emplace_back(cur);
        cur.clear();
    };
    for (char ch : text) {
        if (ch == ',') {
            flush();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur.push_back(ch);
        }
    }
    flush();
    return IntPolynomial(std::move(coeffs));
}

} // namespace detail

inline IntPolynomial IntPolynomial::parse(const std::string& text) {
    bool has_x = text.find('x') != std::string::npos || text.find('X') != std::string::npos;
    if (!has_x && text.find(',') != std::string::npos) return detail::parse_coeff_list(text);

    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch == 'X' ? 'x' : ch);
    if (s.empty()) detail::parse_fail(text, "empty input");

    std::vector<mpz_class> coeffs;
    std::size_t i = 0;
    auto read_digits = [&]() -> std::string {
        std::string digits;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits.push_back(s[i++]);
        return digits;
    };

    bool any_term = false;
    while (i < s.size()) {
        int sign = 1;
        bool saw_sign = false;
        while (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            if (s[i] == '-') sign = -sign;
            saw_sign = true;
            ++i;
        }
        if (any_term && !saw_sign) detail::parse_fail(text, "missing '+' or '-' between terms");
        if (i >= s.size()) detail::parse_fail(text, "dangling sign");

        std::string digits = read_digits();
        if (i < s.size() && s[i] == '*') {
            if (i + 1 >= s.size() || s[i + 1] != 'x') detail::parse_fail(text, "'*' must be followed by x");
            ++i;
        }

        std::size_t exponent = 0;
        if (i < s.size() && s[i] == 'x') {
            ++i;
            exponent = 1;
            if (i < s.size() && s[i] == '^') {
                ++i;
                std::string e = read_digits();
                if (e.empty()) detail::parse_fail(text, "'^' must be followed by an integer");
                if (e.size() > 4) detail::parse_fail(text, "exponent too large");
                exponent = static_cast<std::size_t>(std::stoul(e));
            }
        } else if (digits.empty()) {
            detail::parse_fail(text, "expected a coefficient or x");
        }

        mpz_class coef = digits.empty() ? mpz_class(1) : mpz_class(digits);
        if (sign < 0) coef = -coef;
        if (coeffs.size() <= exponent) coeffs.resize(exponent + 1, mpz_class(0));
        coeffs[exponent] += coef;
        any_term = true;
    }
    return IntPolynomial(std::move(coeffs));
}

inline std::string IntPolynomial::str() const {
    if (coeffs_.empty()) return "0";
    std::string out;
    for (std::size_t i = coeffs_.size(); i-- > 0;) {
        const mpz_class& c = coeffs_[i];
        if (c == 0) continue;
        mpz_class a = abs(c);
        if (out.empty()) {
            if (c < 0) out += "-";
        } else {
            out += (c < 0) ? "-" : "+";
        }
        if (i == 0 || a != 1) out += a.get_str();
        if (i >= 1) {
            out += "x";
            if (i >= 2) out += "^" + std::to_string(i);
        }
    }
    return out.empty() ? "0" : out;
}

// Determinant of a square big-integer matrix by Bareiss fraction-free
// elimination: every division is exact, so the result is exact.
inline mpz_class determinant_bareiss(std::vector<std::vector<mpz_class>> m) {
    const std::size_t n = m.size();
    if (n == 0) return 1;
    mpz_class prev_pivot = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            std::size_t swap_row = k + 1;
            while (swap_row < n && m[swap_row][k] == 0) ++swap_row;
            if (swap_row == n) return 0;
            std::swap(m[k], m[swap_row]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                mpz_class t = m[i][j] * m[k][k] - m[i][k] * m[k][j];
                mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev_pivot.get_mpz_t());
            }
            m[i][k] = 0;
        }
        prev_pivot = m[k][k];
    }
    return sign > 0 ? m[n - 1][n - 1] : mpz_class(-m[n - 1][n - 1]);
}

// Resultant of f and g via the Sylvester matrix.
inline mpz_class resultant(const IntPolynomial& f, const IntPolynomial& g) {
    const int m = f.degree(), n = g.degree();
    if (m < 0 || n < 0) throw std::domain_error("resultant of zero polynomial");
    if (m == 0 && n == 0) return 1;
    const std::size_t size = static_cast<std::size_t>(m + n);
    std::vector<std::vector<mpz_class>> syl(size, std::vector<mpz_class>(size, mpz_class(0)));
    for (int row = 0; row < n; ++row)
        for (int j = 0; j <= m; ++j) syl[row][row + j] = f.coeff(static_cast<std::size_t>(m - j));
    for (int row = 0; row < m; ++row)
        for (int j = 0; j <= n; ++j) syl[n + row][row + j] = g.coeff(static_cast<std::size_t>(n - j));
    return determinant_bareiss(std::move(syl));
}

// disc f = (-1)^{d(d-1)/2} Res(f, f') / lc(f), exact. Zero iff f has a
// repeated complex root. Degree-1 polynomials have discriminant 1 by
// convention; degree 0 is rejected.
inline mpz_class discriminant(const IntPolynomial& f) {
    const int d = f.degree();
    if (d < 1) throw std::domain_error("discriminant requires degree >= 1");
    if (d == 1) return 1;
    mpz_class res = resultant(f, f.derivative());
    mpz_class disc;
    mpz_divexact(disc.get_mpz_t(), res.get_mpz_t(), f.leading().get_mpz_t());
    if ((static_cast<unsigned>(d) * static_cast<unsigned>(d - 1) / 2) % 2 == 1) disc = -disc;
    return disc;
}

} // namespace polylcm
