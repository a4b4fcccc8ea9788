#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "core.hpp"

namespace sfarg {

using i64 = std::int64_t;
using u64 = std::uint64_t;

inline constexpr u64 default_sieve_budget = 100'000'000;

class PrimeTable {
public:
    PrimeTable() = default;

    u64 limit() const { return limit_; }
    const std::vector<std::uint32_t>& primes() const& { return primes_; }
    // keeps `for (auto p : sieve_primes(n).primes())` safe
    std::vector<std::uint32_t> primes() && { return std::move(primes_); }
    std::size_t size() const { return primes_.size(); }
    std::uint32_t operator[](std::size_t i) const { return primes_[i]; }

    bool is_prime(u64 n) const
    {
        if (n > limit_) throw InputError("is_prime: " + std::to_string(n) + " beyond table limit");
        return n >= 2 && std::binary_search(primes_.begin(), primes_.end(), std::uint32_t(n));
    }
    // number of primes <= x
    std::size_t count_upto(double x) const
    {
        if (x < 2) return 0;
        auto v = std::uint32_t(std::min<double>(x, 4.0e9));
        return std::upper_bound(primes_.begin(), primes_.end(), v) - primes_.begin();
    }

private:
    friend PrimeTable sieve_primes(u64 limit, u64 budget);
    u64 limit_ = 0;
    std::vector<std::uint32_t> primes_;
};

// Odd-only Eratosthenes.
inline PrimeTable sieve_primes(u64 limit, u64 budget = default_sieve_budget)
{
    if (limit < 2) throw InputError("sieve_primes: limit must be >= 2");
    if (limit > budget) throw InputError("sieve_primes: limit " + std::to_string(limit) + " exceeds budget");
    PrimeTable t;
    t.limit_ = limit;
    std::vector<bool> composite(limit / 2 + 1, false);
    t.primes_.push_back(2);
    for (u64 i = 3; i <= limit; i += 2) {
        if (composite[i / 2]) continue;
        t.primes_.push_back(std::uint32_t(i));
        for (u64 j = i * i; j <= limit; j += 2 * i) composite[j / 2] = true;
    }
    return t;
}

// Smallest prime factor table, used wherever multiplicative functions are tabulated.
inline std::vector<std::uint32_t> smallest_factor_table(std::size_t n)
{
    std::vector<std::uint32_t> spf(n + 1, 0);
    for (std::size_t i = 2; i <= n; ++i) {
        if (spf[i]) continue;
        for (std::size_t j = i; j <= n; j += i)
            if (!spf[j]) spf[j] = std::uint32_t(i);
    }
    return spf;
}

inline bool is_prime_u64(u64 n)
{
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (u64 d = 3; d * d <= n; d += 2)
        if (n % d == 0) return false;
    return true;
}

struct PrimePower {
    u64 p;
    int e;
};

inline std::vector<PrimePower> factorize(u64 n)
{
    std::vector<PrimePower> out;
    for (u64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p) continue;
        int e = 0;
        while (n % p == 0) { n /= p; ++e; }
        out.push_back({p, e});
    }
    if (n > 1) out.push_back({n, 1});
    return out;
}

// sup_n d_k(n)/n^e, from the per-prime maxima of binom(j+k−1,k−1)/p^{je}.
inline double divisor_bound_constant(int k, double e)
{
    double prod = 1;
    for (u64 p = 2;; ++p) {
        if (!is_prime_u64(p)) continue;
        if (double(k) <= std::pow(double(p), e)) break;
        double best = 1, d = 1;
        for (int j = 1; j < 400; ++j) {
            d = d * double(j + k - 1) / double(j);
            best = std::max(best, d / std::pow(double(p), j * e));
        }
        prod *= best;
    }
    return prod;
}

struct MertensSums {
    double x = 0;
    double sum_recip = 0;
    double sum_logp_over_p = 0;
    double sum_log2p_over_p = 0;
    double c1_estimate = 0;
};

inline MertensSums mertens_sums(double x, const PrimeTable& table)
{
    if (!(x >= 2)) throw InputError("mertens_sums: x must be >= 2");
    if (double(table.limit()) < std::floor(x)) throw InputError("mertens_sums: prime table too small for x");
    CompensatedSum r, l1, l2;
    for (auto p : table.primes()) {
        if (p > x) break;
        double lp = std::log(double(p));
        r += 1.0 / p;
        l1 += lp / p;
        l2 += lp * lp / p;
    }
    MertensSums m;
    m.x = x;
    m.sum_recip = r.value();
    m.sum_logp_over_p = l1.value();
    m.sum_log2p_over_p = l2.value();
    m.c1_estimate = m.sum_recip - std::log(std::log(x));
    return m;
}

inline u64 divisor_tau(u64 n)
{
    u64 t = 1;
    for (auto [p, e] : factorize(n)) t *= u64(e + 1);
    return t;
}

inline double von_mangoldt(u64 n)
{
    if (n < 2) return 0.0;
    auto f = factorize(n);
    return f.size() == 1 ? std::log(double(f[0].p)) : 0.0;
}

// Returns p if n = p^m (m >= 1), else 0.
inline u64 prime_power_base(u64 n)
{
    if (n < 2) return 0;
    auto f = factorize(n);
    return f.size() == 1 ? f[0].p : 0;
}

inline i64 mod(i64 a, i64 m)
{
    i64 r = a % m;
    return r < 0 ? r + m : r;
}

inline i64 inverse_mod(i64 a, i64 m)
{
    i64 r0 = m, r1 = mod(a, m), s0 = 0, s1 = 1;
    while (r1) {
        i64 qq = r0 / r1;
        std::tie(r0, r1) = std::make_pair(r1, r0 - qq * r1);
        std::tie(s0, s1) = std::make_pair(s1, s0 - qq * s1);
    }
    if (r0 != 1) throw InputError("inverse_mod: not invertible");
    return mod(s0, m);
}

inline i64 mulmod(i64 a, i64 b, i64 m) { return i64((__int128)a * b % m); }

// S(m,n;c) by direct summation.
inline double kloosterman_sum(i64 m, i64 n, i64 c)
{
    if (c < 1) throw InputError("kloosterman_sum: c must be >= 1");
    if (c == 1) return 1.0;
    CompensatedSum re, im;
    i64 mm = mod(m, c), nn = mod(n, c);
    for (i64 a = 1; a < c; ++a) {
        if (std::gcd(a, c) != 1) continue;
        i64 k = mod(mulmod(mm, a, c) + mulmod(nn, inverse_mod(a, c), c), c);
        double th = 2.0 * pi * double(k) / double(c);
        re += std::cos(th);
        im += std::sin(th);
    }
    if (std::fabs(im.value()) > 1e-10)
        throw NumericalError("kloosterman_sum: imaginary residue " + fmt15(im.value()));
    return re.value();
}

// The explicit bound (m,n,c)·min(c/(n,c), c/(m,c))^{1/2}·τ(c).
inline double kloosterman_bound(i64 m, i64 n, i64 c)
{
    i64 g = std::gcd(std::gcd(m, n), c);
    double a = double(c) / double(std::gcd(n, c));
    double b = double(c) / double(std::gcd(m, c));
    return double(g) * std::sqrt(std::min(a, b)) * double(divisor_tau(u64(c)));
}

// Twisted multiplicativity: S(m,n;c1c2) = S(m c̄2, n c̄2; c1) S(m c̄1, n c̄1; c2).
inline double kloosterman_sum_crt(i64 m, i64 n, i64 c)
{
    if (c < 1) throw InputError("kloosterman_sum_crt: c must be >= 1");
    double prod = 1.0;
    for (auto [p, e] : factorize(u64(c))) {
        i64 M = 1;
        for (int i = 0; i < e; ++i) M *= i64(p);
        i64 r = c / M;
        i64 rb = inverse_mod(r, M);
        prod *= kloosterman_sum(mulmod(mod(m, M), rb, M), mulmod(mod(n, M), rb, M), M);
    }
    return prod;
}

namespace detail {

template <class R>
R j1_series(R x, int order)
{
    R h = x / 2, h2 = h * h;
    R term = h, sum = h;
    for (int k = 1; k <= order; ++k) {
        term *= -h2 / (R(k) * R(k + 1));
        sum += term;
    }
    return sum;
}

inline double j1_hankel(double x)
{
    // P, Q asymptotic series, truncated at the smallest term
    const double mu = 4.0;
    double p = 1, qs = 0, a = 1, last = 1e300;
    double z8 = 8.0 * x;
    for (int k = 1; k < 200; ++k) {
        double na = a * (mu - double((2 * k - 1) * (2 * k - 1))) / (double(k) * z8);
        if (std::fabs(na) >= last) break;
        last = std::fabs(na);
        a = na;
        switch (k % 4) {
        case 1: qs += a; break;
        case 2: p -= a; break;
        case 3: qs -= a; break;
        case 0: p += a; break;
        }
        if (std::fabs(a) < 1e-18) break;
    }
    double s = std::sin(x), c = std::cos(x);
    // chi = x - 3π/4
    double cchi = (s - c) / std::numbers::sqrt2;
    double schi = -(s + c) / std::numbers::sqrt2;
    return std::sqrt(2.0 / (pi * x)) * (p * cchi - qs * schi);
}

} // namespace detail

inline constexpr double j1_crossover = 18.0;

inline double bessel_j1_series(double x)
{
    if (x <= 6.0) return double(detail::j1_series<long double>(x, 40));
    return double(detail::j1_series<__float128>(x, 60));
}

inline double bessel_j1_asymptotic(double x) { return detail::j1_hankel(x); }

inline double bessel_j1(double x)
{
    if (x < 0) throw InputError("bessel_j1: x must be >= 0");
    if (x == 0) return 0.0;
    return x <= j1_crossover ? bessel_j1_series(x) : bessel_j1_asymptotic(x);
}

// Principal branch of log Γ on C \ (-∞, 0].
inline cplx log_gamma(cplx z)
{
    if (z.imag() == 0 && z.real() <= 0 && z.real() == std::floor(z.real()))
        throw InputError("log_gamma: pole at nonpositive integer");
    // Stirling with 12 terms is below 1e-16 once |z| >= 8 and Re z >= 1
    cplx shift = 0;
    while (z.real() < 1.0 || std::norm(z) < 64.0) {
        shift += std::log(z);
        z += 1.0;
    }
    static const double b2k[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730,
                                 7.0 / 6, -3617.0 / 510, 43867.0 / 798, -174611.0 / 330,
                                 854513.0 / 138, -236364091.0 / 2730};
    cplx zinv = 1.0 / z, zinv2 = zinv * zinv;
    cplx corr = 0;
    for (int k = 12; k >= 1; --k) corr = corr * zinv2 + b2k[k - 1] / double(2 * k * (2 * k - 1));
    corr *= zinv;
    return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * pi) + corr - shift;
}

// log Γ(z1) continued along the horizontal segment from the principal value at z0.
inline cplx log_gamma_track(cplx z0, cplx z1, int initial_steps = 16)
{
    if (z0.imag() != z1.imag()) throw InputError("log_gamma_track: segment must be horizontal");
    if (z0.imag() == 0) {
        double lo = std::min(z0.real(), z1.real()), hi = std::max(z0.real(), z1.real());
        if (lo <= 0 && std::ceil(lo) <= std::min(hi, 0.0))
            throw InputError("log_gamma_track: segment meets a pole of Gamma");
    }
    cplx cur = log_gamma(z0);
    if (z0 == z1) return cur;
    for (int halvings = 0; halvings <= 20; ++halvings) {
        int steps = initial_steps << halvings;
        cplx val = cur;
        bool ok = true;
        for (int k = 1; k <= steps; ++k) {
            cplx z = z0 + (z1 - z0) * (double(k) / steps);
            cplx pv = log_gamma(z);
            double d = pv.imag() - val.imag();
            double wraps = std::round(d / (2 * pi));
            double adj = pv.imag() - 2 * pi * wraps;
            if (std::fabs(adj - val.imag()) >= pi / 2) { ok = false; break; }
            val = {pv.real(), adj};
        }
        if (ok) return val;
    }
    throw NumericalError("log_gamma_track: phase did not stabilise");
}

} // namespace sfarg
