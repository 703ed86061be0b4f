#pragma once

#include <cstdint>
#include <vector>

namespace polylcm {

// Primes up to and including `bound`, by Eratosthenes.
inline std::vector<std::uint32_t> primes_up_to(std::uint64_t bound) {
    std::vector<std::uint32_t> primes;
    if (bound < 2) return primes;
    std::vector<bool> composite(bound + 1, false);
    for (std::uint64_t p = 2; p <= bound; ++p) {
        if (composite[p]) continue;
        primes.push_back(static_cast<std::uint32_t>(p));
        for (std::uint64_t m = p * p; m <= bound; m += p) composite[m] = true;
    }
    return primes;
}

// Smallest-prime-factor table: spf[n] = least prime dividing n (spf[1] = 1).
inline std::vector<std::uint32_t> smallest_prime_factor_table(std::uint64_t bound) {
    std::vector<std::uint32_t> spf(bound + 1, 0);
    if (bound >= 1) spf[1] = 1;
    for (std::uint64_t p = 2; p <= bound; ++p) {
        if (spf[p] != 0) continue;
        for (std::uint64_t m = p; m <= bound; m += p)
            if (spf[m] == 0) spf[m] = static_cast<std::uint32_t>(p);
    }
    return spf;
}

} // namespace polylcm
