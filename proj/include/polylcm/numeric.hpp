#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include <gmpxx.h>

namespace polylcm {

// Natural log of a big integer, computed from the top bits and the
// binary exponent. Accurate to double precision (~15 significant digits)
// for any operand size; never materializes the value as a float.
inline double log_mpz(const mpz_class& v) {
    if (sgn(v) == 0) return -std::numeric_limits<double>::infinity();
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, v.get_mpz_t());
    return std::log(std::fabs(mant)) + static_cast<double>(exp2) * std::numbers::ln2;
}

inline double log_u64(std::uint64_t v) { return std::log(static_cast<double>(v)); }

// Exact rational carried alongside its float rendering, so pass/fail
// thresholds never depend on silent rounding.
struct Fraction {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

inline mpz_class mpz_from_u64(std::uint64_t v) {
    mpz_class r;
    mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
    return r;
}

inline bool mpz_fits_u64(const mpz_class& v) {
    return sgn(v) >= 0 && mpz_sizeinbase(v.get_mpz_t(), 2) <= 64;
}

inline std::uint64_t mpz_to_u64(const mpz_class& v) {
    std::uint64_t out = 0;
    mpz_export(&out, nullptr, 1, sizeof(out), 0, 0, v.get_mpz_t());
    return out;
}

} // namespace polylcm
