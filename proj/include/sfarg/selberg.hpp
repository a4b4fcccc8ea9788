#pragma once

#include <cmath>
#include <vector>

#include "lfunction.hpp"

namespace sfarg {

// Selberg's smoothed von Mangoldt weight.
inline double lambda_x_weight(double n, double x)
{
    double lx = std::log(x);
    if (n <= x) return 1;
    if (n <= x * x) {
        double a = std::log(x * x * x / n), b = std::log(x * x / n);
        return (a * a - 2 * b * b) / (2 * lx * lx);
    }
    if (n < x * x * x) {
        double a = std::log(x * x * x / n);
        return a * a / (2 * lx * lx);
    }
    return 0;
}

inline double lambda_x(u64 n, double x)
{
    if (!(x >= 4)) throw InputError("lambda_x: x must be >= 4");
    double L = von_mangoldt(n);
    return L == 0 ? 0.0 : L * lambda_x_weight(double(n), x);
}

struct SelbergTable {
    double x = 0;
    std::vector<u64> n;      // prime powers below x³, increasing
    std::vector<u64> base;   // p with n = p^m
    std::vector<int> power;  // m
    std::vector<double> value;
};

inline SelbergTable selberg_table(double x)
{
    if (!(x >= 4)) throw InputError("selberg_table: x must be >= 4");
    SelbergTable T;
    T.x = x;
    double X3 = x * x * x;
    if (X3 > 1e9) throw InputError("selberg_table: x^3 too large");
    u64 N = u64(std::floor(X3));
    struct Entry { u64 n, p; int m; };
    std::vector<Entry> es;
    for (u64 p : sieve_primes(N).primes()) {
        u64 pk = p;
        for (int m = 1;; ++m) {
            if (double(pk) >= X3) break;
            es.push_back({pk, p, m});
            if (pk > N / p) break;
            pk *= p;
        }
    }
    std::sort(es.begin(), es.end(), [](const Entry& a, const Entry& b) { return a.n < b.n; });
    for (const auto& e : es) {
        T.n.push_back(e.n);
        T.base.push_back(e.p);
        T.power.push_back(e.m);
        T.value.push_back(std::log(double(e.p)) * lambda_x_weight(double(e.n), x));
    }
    return T;
}

struct Satake {
    cplx alpha, beta;
};

inline Satake satake(const HeckeEigenform& f, u64 p)
{
    if (!is_prime_u64(p)) throw InputError("satake: p must be prime");
    double l = f.lambda_p(p);
    if (std::fabs(l) > 2 + 1e-8) throw NumericalError("satake: Deligne bound violated at p=" + std::to_string(p));
    if (p == f.q) return {cplx(l, 0), cplx(0, 0)};
    l = std::clamp(l, -2.0, 2.0);
    double im = std::sqrt(std::max(0.0, 1 - l * l / 4));
    return {cplx(l / 2, im), cplx(l / 2, -im)};
}

// α^m + β^m from the power-sum recurrence, real by construction.
inline double c_f_prime_power(const HeckeEigenform& f, u64 p, int m)
{
    double l = f.lambda_p(p);
    if (p == f.q) return std::pow(l, m);
    double c0 = 2, c1 = l;
    for (int k = 1; k < m; ++k) {
        double c2 = l * c1 - c0;
        c0 = c1;
        c1 = c2;
    }
    return m == 0 ? 2.0 : c1;
}

inline double c_f(const HeckeEigenform& f, u64 n)
{
    if (n < 2) return 0;
    u64 p = prime_power_base(n);
    if (p == 0) return 0;
    int m = 0;
    for (u64 k = n; k > 1; k /= p) ++m;
    return c_f_prime_power(f, p, m);
}

struct CoefficientSeries {
    int form_id = 0;
    double x = 0;
    std::vector<u64> n;
    std::vector<double> value; // C_f(n)Λ_x(n)
};

inline CoefficientSeries coefficient_series(const HeckeEigenform& f, const SelbergTable& T)
{
    CoefficientSeries C;
    C.form_id = f.id;
    C.x = T.x;
    for (std::size_t i = 0; i < T.n.size(); ++i) {
        if (T.base[i] > f.p_max())
            throw InputError("coefficient_series: eigenvalues needed up to " + std::to_string(T.base[i]));
        C.n.push_back(T.n[i]);
        C.value.push_back(c_f_prime_power(f, T.base[i], T.power[i]) * T.value[i]);
    }
    return C;
}

// Σ_n coeff_n n^{−s}, optionally with each term divided by log n.
inline cplx dirichlet_poly(const std::vector<u64>& n, const std::vector<double>& coeff, cplx s, bool divide_by_log)
{
    CompensatedComplexSum acc;
    for (std::size_t i = 0; i < n.size(); ++i) {
        double ln = std::log(double(n[i]));
        double c = divide_by_log ? coeff[i] / ln : coeff[i];
        acc += c * std::exp(-s * ln);
    }
    return acc.value();
}

inline cplx weighted_poly(const CoefficientSeries& C, cplx s, bool divide_by_log)
{
    return dirichlet_poly(C.n, C.value, s, divide_by_log);
}

inline cplx weighted_poly(const HeckeEigenform& f, cplx s, double x, bool divide_by_log)
{
    return weighted_poly(coefficient_series(f, selberg_table(x)), s, divide_by_log);
}

// Σ_{n≤N} C_f(n)Λ(n) n^{−s}: the unsmoothed series of −L′/L.
inline cplx log_derivative_series(const HeckeEigenform& f, cplx s, u64 N)
{
    std::vector<u64> ns;
    std::vector<double> cs;
    for (u64 p : sieve_primes(N).primes()) {
        if (p > f.p_max()) throw InputError("log_derivative_series: N beyond the eigenvalue table");
        u64 pk = p;
        for (int m = 1;; ++m) {
            ns.push_back(pk);
            cs.push_back(c_f_prime_power(f, p, m) * std::log(double(p)));
            if (pk > N / p) break;
            pk *= p;
        }
    }
    return dirichlet_poly(ns, cs, s, false);
}

struct ApproxS {
    double main = 0;
    double sigma_x = 0;
    SigmaStatus sigma_status = SigmaStatus::flagged;
    double poly_term = 0; // (σ_x−½)|Σ C_f(n)Λ_x(n) n^{−σ_x−it}|
    double log_term = 0;  // (σ_x−½) log(|t|+q)
};

inline ApproxS approx_s(const LFunction& L, double t, double x, AFEParams p = {})
{
    const auto& f = L.form();
    auto sx = sigma_x(L, std::fabs(t), x, p);
    auto C = coefficient_series(f, selberg_table(x));
    cplx s(sx.value, t);
    ApproxS r;
    r.sigma_x = sx.value;
    r.sigma_status = sx.status;
    r.main = weighted_poly(C, s, true).imag() / pi;
    r.poly_term = (sx.value - 0.5) * std::abs(weighted_poly(C, s, false));
    r.log_term = (sx.value - 0.5) * std::log(std::fabs(t) + double(f.q));
    return r;
}

// M(t,f) = (1/π) Im Σ_{p≤x³} λ_f(p) p^{−½−it}
inline double m_value(const HeckeEigenform& f, double t, double x)
{
    double X3 = x * x * x;
    u64 N = u64(std::floor(X3 + 1e-9));
    if (N > f.p_max()) throw InputError("m_value: eigenvalues needed up to " + std::to_string(N));
    CompensatedSum acc;
    for (std::size_t i = 0; i < f.primes.size() && f.primes[i] <= N; ++i) {
        double lp = std::log(double(f.primes[i]));
        acc += f.lambda[i] * std::sin(t * lp) / std::sqrt(double(f.primes[i]));
    }
    return -acc.value() / pi;
}

inline double r_value(const LFunction& L, double t, double x, AFEParams p = {})
{
    return s_of_t(L, t, p).s_value - m_value(L.form(), t, x);
}

} // namespace sfarg
