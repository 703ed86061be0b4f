#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "polylcm/poly.hpp"

namespace polylcm {
namespace fp {

// Dense polynomials over F_p for small p (p < 2^31). Degrees here are
// tiny (<= 2 deg f), so schoolbook arithmetic throughout.

using Poly = std::vector<std::uint64_t>; // coeff[i] in [0,p), trailing term = degree

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p) { return a * b % p; }

inline std::uint64_t powmod_u64(std::uint64_t base, std::uint64_t e, std::uint64_t p) {
    std::uint64_t r = 1 % p;
    base %= p;
    while (e > 0) {
        if (e & 1) r = mulmod(r, base, p);
        base = mulmod(base, base, p);
        e >>= 1;
    }
    return r;
}

inline std::uint64_t invmod(std::uint64_t a, std::uint64_t p) { return powmod_u64(a % p, p - 2, p); }

inline void trim(Poly& f) {
    while (!f.empty() && f.back() == 0) f.pop_back();
}

inline int degree(const Poly& f) { return static_cast<int>(f.size()) - 1; }

inline Poly reduce(const IntPolynomial& f, std::uint64_t p) {
    Poly out(f.coeffs().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        unsigned long r = mpz_fdiv_ui(f.coeff(i).get_mpz_t(), static_cast<unsigned long>(p));
        out[i] = r;
    }
    trim(out);
    return out;
}

inline Poly mul(const Poly& a, const Poly& b, std::uint64_t p) {
    if (a.empty() || b.empty()) return {};
    Poly out(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] = (out[i + j] + a[i] * b[j]) % p;
    }
    trim(out);
    return out;
}

// Remainder of a modulo m (m nonzero).
inline Poly rem(Poly a, const Poly& m, std::uint64_t p) {
    if (m.empty()) throw std::domain_error("division by zero polynomial");
    const std::uint64_t lead_inv = invmod(m.back(), p);
    while (degree(a) >= degree(m)) {
        std::uint64_t q = mulmod(a.back(), lead_inv, p);
        std::size_t shift = a.size() - m.size();
        for (std::size_t i = 0; i < m.size(); ++i) {
            std::uint64_t sub = mulmod(q, m[i], p);
            a[shift + i] = (a[shift + i] + p - sub) % p;
        }
        trim(a);
        if (a.empty()) break;
    }
    return a;
}

inline Poly quotient(Poly a, const Poly& m, std::uint64_t p) {
    if (m.empty()) throw std::domain_error("division by zero polynomial");
    if (degree(a) < degree(m)) return {};
    Poly q(a.size() - m.size() + 1, 0);
    const std::uint64_t lead_inv = invmod(m.back(), p);
    while (degree(a) >= degree(m)) {
        std::uint64_t c = mulmod(a.back(), lead_inv, p);
        std::size_t shift = a.size() - m.size();
        q[shift] = c;
        for (std::size_t i = 0; i < m.size(); ++i) {
            std::uint64_t sub = mulmod(c, m[i], p);
            a[shift + i] = (a[shift + i] + p - sub) % p;
        }
        trim(a);
        if (a.empty()) break;
    }
    return q;
}

inline Poly make_monic(Poly f, std::uint64_t p) {
    trim(f);
    if (f.empty()) return f;
    std::uint64_t inv = invmod(f.back(), p);
    for (auto& c : f) c = mulmod(c, inv, p);
    return f;
}

inline Poly gcd(Poly a, Poly b, std::uint64_t p) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        Poly r = rem(a, b, p);
        a = std::move(b);
        b = std::move(r);
    }
    return make_monic(std::move(a), p);
}

// base^e modulo (m, p) by square-and-multiply.
inline Poly powmod(Poly base, const mpz_class& e, const Poly& m, std::uint64_t p) {
    Poly result{1};
    base = rem(std::move(base), m, p);
    const std::size_t bits = mpz_sizeinbase(e.get_mpz_t(), 2);
    for (std::size_t i = bits; i-- > 0;) {
        result = rem(mul(result, result, p), m, p);
        if (mpz_tstbit(e.get_mpz_t(), i)) result = rem(mul(result, base, p), m, p);
    }
    return result;
}

// x^p mod m.
inline Poly frobenius(const Poly& m, std::uint64_t p) {
    return powmod(Poly{0, 1}, mpz_class(static_cast<unsigned long>(p)), m, p);
}

// Roots of f over F_p via the x^p - x split, followed by equal-degree
// splitting down to linear factors. The shift randomness is seeded so
// runs are reproducible.
inline std::vector<std::uint64_t> roots_by_splitting(const Poly& f, std::uint64_t p, std::uint64_t seed) {
    std::vector<std::uint64_t> roots;
    Poly g = make_monic(f, p);
    if (g.empty()) throw std::domain_error("roots of the zero polynomial");

    // Strip the root at 0 so the (x+a)^((p-1)/2) splitting never sees it.
    if (g[0] == 0) {
        roots.push_back(0);
        std::size_t shift = 1;
        while (shift < g.size() && g[shift] == 0) ++shift;
        g.erase(g.begin(), g.begin() + static_cast<long>(shift));
    }

    Poly xp = frobenius(g, p);
    if (xp.size() < 2) xp.resize(2, 0);
    xp[1] = (xp[1] + p - 1) % p; // x^p - x
    trim(xp);
    Poly linear_part = gcd(g, xp, p);

    std::mt19937_64 rng(seed ^ (p * 0x9e3779b97f4a7c15ull));
    const mpz_class half((static_cast<unsigned long>(p) - 1) / 2);

    std::vector<Poly> stack{linear_part};
    while (!stack.empty()) {
        Poly cur = std::move(stack.back());
        stack.pop_back();
        if (degree(cur) <= 0) continue;
        if (degree(cur) == 1) {
            roots.push_back((p - cur[0]) % p);
            continue;
        }
        if (p == 2) { // only candidate left is 1; 0 was stripped above
            std::uint64_t at_one = 0;
            for (std::uint64_t c : cur) at_one ^= c;
            if (at_one == 0) roots.push_back(1);
            continue;
        }
        std::uint64_t a = rng() % p;
        Poly probe = powmod(Poly{a, 1}, half, cur, p);
        if (probe.empty())
            probe = Poly{p - 1};
        else
            probe[0] = (probe[0] + p - 1) % p; // (x+a)^((p-1)/2) - 1
        trim(probe);
        Poly h = gcd(cur, probe, p);
        if (degree(h) <= 0 || degree(h) == degree(cur)) {
            stack.push_back(std::move(cur)); // unlucky shift, retry
            continue;
        }
        Poly other = quotient(std::move(cur), h, p);
        stack.push_back(std::move(h));
        stack.push_back(std::move(other));
    }
    return roots;
}

// Irreducibility of f mod p (for f of degree d with p not dividing the
// leading coefficient): f is irreducible iff x^{p^d} = x mod f and
// gcd(x^{p^{d/q}} - x, f) = 1 for every prime q | d.
inline bool irreducible_mod_p(const IntPolynomial& f, std::uint64_t p) {
    Poly g = make_monic(reduce(f, p), p);
    const int d = degree(g);
    if (d != f.degree()) throw std::domain_error("degree drops mod p");
    if (d <= 0) return false;
    if (d == 1) return true;

    auto frobenius_power = [&](int j) {
        // x^{p^j} mod g
        Poly y{0, 1};
        const mpz_class pe(static_cast<unsigned long>(p));
        for (int t = 0; t < j; ++t) y = powmod(std::move(y), pe, g, p);
        return y;
    };

    Poly top = frobenius_power(d);
    if (top.size() != 2 || top[0] != 0 || top[1] != 1) return false;

    std::vector<int> prime_divs;
    int rem_d = d;
    for (int q = 2; q * q <= rem_d; ++q)
        if (rem_d % q == 0) {
            prime_divs.push_back(q);
            while (rem_d % q == 0) rem_d /= q;
        }
    if (rem_d > 1) prime_divs.push_back(rem_d);

    for (int q : prime_divs) {
        Poly y = frobenius_power(d / q);
        if (y.size() < 2) y.resize(2, 0);
        y[1] = (y[1] + p - 1) % p;
        trim(y);
        Poly common = gcd(g, y, p);
        if (degree(common) != 0) return false;
    }
    return true;
}

} // namespace fp
} // namespace polylcm
