#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "arith.hpp"

namespace sfarg {

// Γ_R(s+μ) = π^{-(s+μ)/2}Γ((s+μ)/2) or Γ_C(s+μ) = 2(2π)^{-(s+μ)}Γ(s+μ).
struct GammaFactor {
    bool complex_type;
    double mu;
};

// Self-dual L-function with real coefficients:
// Λ(s) = N^{s/2} Π Γ(s+μ_j) L(s) = ε Λ(1−s), L(s) = Σ a_n n^{−s}.
struct SelfDualL {
    double conductor = 1;
    std::vector<GammaFactor> gamma;
    int root_number = 1;
    std::vector<double> a; // a[0] unused
    // |a_n| <= coeff_const · n^coeff_exponent, used for rigorous tail bounds
    double coeff_const = 2;
    double coeff_exponent = 0.5;
    // lower bound on the number of terms in either sum
    std::size_t min_terms = 1;
};

inline cplx log_gamma_factor(const SelfDualL& L, cplx s)
{
    cplx r = 0;
    for (const auto& g : L.gamma) {
        cplx z = s + g.mu;
        if (g.complex_type)
            r += std::log(2.0) - z * std::log(2 * pi) + log_gamma(z);
        else
            r += -0.5 * z * std::log(pi) + log_gamma(0.5 * z);
    }
    return r;
}

struct AfeOptions {
    double target_abs_error = 1e-8;
    // Splits the conductor as A√N | √N/A between the two sums.
    double A = 1.0;
};

struct AfeResult {
    cplx value;
    std::size_t terms_direct = 0, terms_dual = 0;
    double tail_bound = 0;
    double gaussian_width = 0; // 0 means no Gaussian factor in the cutoff
};

class InsufficientCoefficients : public InputError {
public:
    InsufficientCoefficients(std::size_t need, std::size_t have)
        : InputError("coefficient table too short: need " + std::to_string(need) + " terms, have " +
                     std::to_string(have)),
          required(need)
    {
    }
    std::size_t required;
};

namespace detail {

struct Contour {
    double c = 1, h = 0.1;
    std::vector<double> u;
    std::vector<cplx> weight; // h/(2π) · G(w) γ(s+w)/γ(s) · Y^w / w
};

inline double min_mu(const SelfDualL& L)
{
    double m = 1e300;
    for (const auto& g : L.gamma) m = std::min(m, g.complex_type ? g.mu : g.mu / 2);
    return m;
}

inline double smoothing_width(double t) { return std::fabs(t) <= 5 ? 0.0 : 16.0; }

inline cplx log_cutoff(double b, cplx w) { return b == 0 ? cplx(0) : w * w / b; }

// Half-width of the u-range outside which the contour integrand is negligible.
inline double u_extent(const SelfDualL& L, cplx s)
{
    double kappa = 0;
    for (const auto& g : L.gamma) kappa += g.complex_type ? pi / 2 : pi / 4;
    return std::fabs(s.imag()) + 60.0 / kappa + 10;
}

// (1/2π)∫|G γ(s+c'+iu)/γ(s)|/|c'+iu| du by a coarse log-space quadrature.
inline double log_vbound(const SelfDualL& L, cplx s, double b, double cp, cplx lg_s)
{
    const double step = 0.5;
    const double U = u_extent(L, s);
    double lmax = -1e300;
    std::vector<double> vals;
    for (double u = -U; u <= U; u += step) {
        cplx w(cp, u);
        double lv = (log_cutoff(b, w) + log_gamma_factor(L, s + w) - lg_s).real() - std::log(std::abs(w));
        vals.push_back(lv);
        lmax = std::max(lmax, lv);
    }
    double acc = 0;
    for (double v : vals) acc += std::exp(v - lmax);
    // coarse grid and finite range: inflate by 2
    return lmax + std::log(acc * step * 2 / (2 * pi));
}

// Smallest N with Σ_{n>N} K n^{e} n^{−σ} |V(n/Y)| below budget, optimised over the shift c'.
inline std::size_t truncation(const SelfDualL& L, cplx s, double Y, double b, double log_budget, double& bound_out)
{
    static const double shifts[] = {0.5, 1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 50};
    cplx lg_s = log_gamma_factor(L, s);
    double sigma = s.real(), e = L.coeff_exponent;
    double bestN = 1e300, best_bound = 0;
    for (double cp : shifts) {
        double alpha = sigma + cp - e;
        if (alpha <= 1.05) continue;
        if (sigma + cp + min_mu(L) <= 0) continue;
        double lb = std::log(L.coeff_const) + log_vbound(L, s, b, cp, lg_s) + cp * std::log(Y) - std::log(alpha - 1);
        // lb + (1−α) log N <= log_budget
        double logN = (lb - log_budget) / (alpha - 1);
        double N = std::exp(std::max(0.0, logN));
        if (N < bestN) {
            bestN = N;
            best_bound = std::exp(lb + (1 - alpha) * std::log(std::max(1.0, N)));
        } else if (N > 2 * bestN) {
            break; // past the optimum; larger shifts only grow the gamma factor
        }
    }
    bound_out = best_bound;
    if (bestN > 1e9) throw NumericalError("afe: truncation length diverges");
    return std::size_t(std::ceil(bestN));
}

inline Contour make_contour(const SelfDualL& L, cplx s, double Y, double b)
{
    Contour C;
    double mm = min_mu(L);
    C.c = std::max(1.0, 1.5 - s.real() - mm);
    double d = std::min(C.c, C.c + s.real() + mm);
    C.h = 0.1 * std::min(1.0, d);
    cplx lg_s = log_gamma_factor(L, s);
    auto logmag = [&](double u) {
        cplx w(C.c, u);
        return log_cutoff(b, w) + log_gamma_factor(L, s + w) - lg_s + w * std::log(Y) - std::log(w);
    };
    const double umax = u_extent(L, s);
    int K = int(umax / C.h);
    std::vector<cplx> lv(2 * K + 1);
    double peak = -1e300;
    for (int k = -K; k <= K; ++k) {
        lv[k + K] = logmag(k * C.h);
        peak = std::max(peak, lv[k + K].real());
    }
    int lo = 0, hi = 2 * K;
    while (lo < 2 * K && lv[lo].real() < peak - 40) ++lo;
    while (hi > 0 && lv[hi].real() < peak - 40) --hi;
    if (lo == 0 || hi == 2 * K) throw NumericalError("afe: contour integrand does not decay in range");
    for (int k = lo; k <= hi; ++k) {
        C.u.push_back((k - K) * C.h);
        C.weight.push_back(std::exp(lv[k]) * (C.h / (2 * pi)));
    }
    return C;
}

// Σ_{n≤N} a_n n^{−s} V_s(n/Y) = Σ_j weight_j · Σ_n a_n n^{−(s+c+iu_j)}
inline cplx smoothed_sum(const std::vector<double>& a, std::size_t N, cplx s, const Contour& C)
{
    const std::size_t J = C.u.size();
    std::vector<double> cr(N + 1), ci(N + 1), sr(N + 1), si(N + 1), logn(N + 1);
    for (std::size_t n = 1; n <= N; ++n) logn[n] = std::log(double(n));
    auto seed = [&](std::size_t j) {
        for (std::size_t n = 1; n <= N; ++n) {
            cplx z = std::exp(-cplx(s.real() + C.c, s.imag() + C.u[j]) * logn[n]);
            cr[n] = z.real();
            ci[n] = z.imag();
        }
    };
    for (std::size_t n = 1; n <= N; ++n) {
        sr[n] = std::cos(C.h * logn[n]);
        si[n] = -std::sin(C.h * logn[n]);
    }
    CompensatedComplexSum total;
    for (std::size_t j = 0; j < J; ++j) {
        if (j % 64 == 0) seed(j);
        double dr = 0, di = 0;
        for (std::size_t n = 1; n <= N; ++n) {
            dr += a[n] * cr[n];
            di += a[n] * ci[n];
        }
        total += C.weight[j] * cplx(dr, di);
        for (std::size_t n = 1; n <= N; ++n) {
            double x = cr[n] * sr[n] - ci[n] * si[n];
            ci[n] = cr[n] * si[n] + ci[n] * sr[n];
            cr[n] = x;
        }
    }
    return total.value();
}

} // namespace detail

// Number of coefficients the AFE will read at s.
inline std::size_t afe_required_terms(const SelfDualL& L, cplx s, const AfeOptions& opt = {})
{
    double b = detail::smoothing_width(s.imag());
    double sqN = std::sqrt(L.conductor);
    double budget = opt.target_abs_error / 4;
    double tb;
    std::size_t n1 = detail::truncation(L, s, opt.A * sqN, b, std::log(budget), tb);
    cplx s2 = 1.0 - s;
    cplx pref = std::log(sqN) * (1.0 - 2.0 * s) + log_gamma_factor(L, s2) - log_gamma_factor(L, s);
    std::size_t n2 = detail::truncation(L, s2, sqN / opt.A, b, std::log(budget) - pref.real(), tb);
    return std::max({n1, n2, L.min_terms});
}

inline AfeResult afe_evaluate(const SelfDualL& L, cplx s, const AfeOptions& opt = {})
{
    AfeResult R;
    double b = detail::smoothing_width(s.imag());
    R.gaussian_width = b;
    double sqN = std::sqrt(L.conductor);
    double budget = opt.target_abs_error / 4;
    double tb1, tb2;
    double Y1 = opt.A * sqN, Y2 = sqN / opt.A;
    std::size_t n1 = detail::truncation(L, s, Y1, b, std::log(budget), tb1);
    cplx s2 = 1.0 - s;
    cplx logpref = std::log(sqN) * (1.0 - 2.0 * s) + log_gamma_factor(L, s2) - log_gamma_factor(L, s);
    std::size_t n2 = detail::truncation(L, s2, Y2, b, std::log(budget) - logpref.real(), tb2);
    n1 = std::max(n1, L.min_terms);
    n2 = std::max(n2, L.min_terms);
    std::size_t have = L.a.empty() ? 0 : L.a.size() - 1;
    if (std::max(n1, n2) > have) throw InsufficientCoefficients(std::max(n1, n2), have);
    auto C1 = detail::make_contour(L, s, Y1, b);
    cplx direct = detail::smoothed_sum(L.a, n1, s, C1);
    auto C2 = detail::make_contour(L, s2, Y2, b);
    cplx dual = detail::smoothed_sum(L.a, n2, s2, C2);
    R.value = direct + double(L.root_number) * std::exp(logpref) * dual;
    R.terms_direct = n1;
    R.terms_dual = n2;
    R.tail_bound = tb1 + tb2 * std::exp(logpref.real());
    return R;
}

} // namespace sfarg
