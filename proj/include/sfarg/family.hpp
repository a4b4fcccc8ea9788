#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "selberg.hpp"

namespace sfarg {

// ---------------------------------------------------------------------------
// Petersson formula

inline double petersson_lhs(const EigenBasis& B, u64 m, u64 n)
{
    CompensatedSum acc;
    for (const auto& f : B.forms) acc += f.omega * lambda_n(f, m) * lambda_n(f, n);
    return acc.value();
}

// q^{−3/2}(m,n,q)(mn)^{1/2}τ((m,n)) / ((m,q)+(n,q))^{1/2}, constant 1.
inline double petersson_error_scale(u64 q, u64 m, u64 n)
{
    u64 g = std::gcd(m, n);
    double num = double(std::gcd(g, q)) * std::sqrt(double(m) * double(n)) * double(divisor_tau(g));
    return std::pow(double(q), -1.5) * num / std::sqrt(double(std::gcd(m, q) + std::gcd(n, q)));
}

struct PeterssonReport {
    u64 q = 0, m = 0, n = 0;
    double lhs = 0;
    double rhs_truncated = 0;
    u64 c_max = 0;
    double tail_bound = 0;
    int kronecker = 0;
    bool lemma_precondition = true; // 6π√(mn) ≤ q
    double error_scale = 0;
};

namespace detail {

// Inverses (0 for non-units) and cos(2πk/M) for one modulus.
struct ModTables {
    u64 M = 0;
    std::vector<std::uint32_t> inv;
    std::vector<double> cosv;
};

inline ModTables mod_tables(u64 M, bool prime)
{
    ModTables T;
    T.M = M;
    T.inv.assign(M, 0);
    if (M > 1) T.inv[1] = 1;
    if (prime) {
        for (u64 i = 2; i < M; ++i) T.inv[i] = std::uint32_t((M - (M / i) * T.inv[M % i] % M) % M);
    } else {
        for (u64 i = 2; i < M; ++i)
            if (std::gcd(i, M) == 1) T.inv[i] = std::uint32_t(inverse_mod(i64(i), i64(M)));
    }
    T.cosv.resize(M);
    const cplx w = std::polar(1.0, 2 * pi / double(M));
    cplx z;
    for (u64 k = 0; k < M; ++k) {
        if (k % 64 == 0) z = std::polar(1.0, 2 * pi * double(k) / double(M));
        T.cosv[k] = z.real();
        z *= w;
    }
    return T;
}

// S(1,a;M) = Σ_{y unit} cos(2π(ȳ + a·y)/M) for several a at once.
inline void kloosterman_batch(const ModTables& T, const std::vector<u64>& as, std::vector<double>& out)
{
    const u64 M = T.M;
    const std::size_t K = as.size();
    out.assign(K, 0.0);
    if (M == 1) {
        std::fill(out.begin(), out.end(), 1.0);
        return;
    }
    std::vector<u64> ay(K, 0);
    std::vector<double> acc(K, 0.0);
    // y and M−y contribute equally; for M ≤ 2 the only unit is self-paired
    const u64 H = M <= 2 ? M - 1 : (M - 1) / 2;
    const double mult = M <= 2 ? 1.0 : 2.0;
    for (u64 y = 1; y <= H; ++y) {
        const u64 iv = T.inv[y];
        for (std::size_t k = 0; k < K; ++k) {
            u64 v = ay[k] + as[k];
            ay[k] = v >= M ? v - M : v;
        }
        if (!iv) continue;
        for (std::size_t k = 0; k < K; ++k) {
            u64 idx = iv + ay[k];
            acc[k] += T.cosv[idx >= M ? idx - M : idx];
        }
    }
    for (std::size_t k = 0; k < K; ++k) out[k] = mult * acc[k];
}

// S(α,β;M) when neither α nor β is a unit.
inline double kloosterman_generic(const ModTables& T, u64 alpha, u64 beta)
{
    const u64 M = T.M;
    double acc = 0;
    for (u64 x = 1; x < M; ++x) {
        if (!T.inv[x]) continue;
        acc += T.cosv[(alpha * x + beta * T.inv[x]) % M];
    }
    return acc;
}

} // namespace detail

// δ_{m,n} − 2π Σ_{c≡0 (q), c≤c_max} S(m,n;c)/c · J₁(4π√(mn)/c) for a batch of pairs.
// S(m,n;c) is assembled prime by prime through twisted multiplicativity, so
// each modulus' tables are built once and shared by all c it divides.
inline std::vector<PeterssonReport> petersson_rhs(u64 q, const std::vector<std::pair<u64, u64>>& pairs, u64 c_max)
{
    if (!is_prime_u64(q)) throw InputError("petersson_rhs: q must be prime");
    if (c_max < q) throw InputError("petersson_rhs: c_max must be >= q");
    for (auto [m, n] : pairs)
        if (m < 1 || n < 1) throw InputError("petersson_rhs: m, n must be >= 1");
    const u64 R = c_max / q;
    const std::size_t P = pairs.size();
    if (double(R) * double(P) > 2e8) throw InputError("petersson_rhs: c_max too large for this many pairs");

    std::vector<double> val(R * P, 1.0); // S(m_i,n_i; q r) at (r−1)·P + i

    auto primes = sieve_primes(std::max<u64>({R, q, 2}));
    std::vector<u64> as;
    std::vector<double> sv;
    std::vector<double> local(P);
    for (u64 p : primes.primes()) {
        if (p != q && p > R) continue;
        const u64 step = p == q ? 1 : p;
        const u64 count = R / step;
        if (count == 0) continue;
        std::map<u64, detail::ModTables> tables;
        std::map<u64, std::vector<double>> memo;
        auto tab = [&](u64 M) -> const detail::ModTables& {
            auto it = tables.find(M);
            if (it == tables.end()) it = tables.emplace(M, detail::mod_tables(M, M == p)).first;
            return it->second;
        };
        for (u64 r = step; r <= R; r += step) {
            u64 c = q * r, M = 1, cof = c;
            while (cof % p == 0) {
                cof /= p;
                M *= p;
            }
            const auto& T = tab(M);
            u64 u = u64(inverse_mod(i64(cof % M), i64(M)));
            u64 u2 = u * u % M;
            // memoise S(1,a;M) over a when this modulus recurs often enough
            bool use_memo = M != p || count * P >= 4 * M;
            auto& mv = memo[M];
            if (use_memo && mv.empty()) mv.assign(M, std::numeric_limits<double>::quiet_NaN());
            as.clear();
            for (std::size_t i = 0; i < P; ++i) {
                auto [m, n] = pairs[i];
                if (m % p && n % p) {
                    u64 a = (m % M) * (n % M) % M * u2 % M;
                    if (use_memo && !std::isnan(mv[a])) continue;
                    if (std::find(as.begin(), as.end(), a) == as.end()) as.push_back(a);
                }
            }
            if (!as.empty()) detail::kloosterman_batch(T, as, sv);
            for (std::size_t i = 0; i < P; ++i) {
                auto [m, n] = pairs[i];
                if (m % p && n % p) {
                    u64 a = (m % M) * (n % M) % M * u2 % M;
                    double s;
                    if (use_memo && !std::isnan(mv[a])) {
                        s = mv[a];
                    } else {
                        s = sv[std::find(as.begin(), as.end(), a) - as.begin()];
                        if (use_memo) mv[a] = s;
                    }
                    local[i] = s;
                } else {
                    local[i] = detail::kloosterman_generic(T, m % M * u % M, n % M * u % M);
                }
            }
            double* row = &val[(r - 1) * P];
            for (std::size_t i = 0; i < P; ++i) row[i] *= local[i];
        }
    }

    std::vector<PeterssonReport> out;
    const double K = double(R);
    for (std::size_t i = 0; i < P; ++i) {
        auto [m, n] = pairs[i];
        PeterssonReport rep;
        rep.q = q;
        rep.m = m;
        rep.n = n;
        rep.c_max = c_max;
        rep.kronecker = m == n;
        double y = 4 * pi * std::sqrt(double(m) * double(n));
        CompensatedSum acc;
        for (u64 r = 1; r <= R; ++r) {
            double c = double(q * r);
            acc += val[(r - 1) * P + i] / c * bessel_j1(y / c);
        }
        rep.rhs_truncated = double(rep.kronecker) - 2 * pi * acc.value();
        // |S| ≤ (m,n)√c τ(c), τ(qr) ≤ 2τ(r), J₁(y) ≤ y/2 and Σ_{r≤X} τ(r) ≤ X(log X + 1)
        double g = double(std::gcd(m, n));
        rep.tail_bound = 2 * pi * (y / 2) * g * 2 * std::pow(double(q), -1.5) * (3 * (std::log(K) + 1) + 6) / std::sqrt(K);
        rep.lemma_precondition = 6 * pi * std::sqrt(double(m) * double(n)) <= double(q);
        rep.error_scale = petersson_error_scale(q, m, n);
        out.push_back(rep);
    }
    return out;
}

inline PeterssonReport petersson_rhs(u64 q, u64 m, u64 n, u64 c_max)
{
    return petersson_rhs(q, std::vector<std::pair<u64, u64>>{{m, n}}, c_max).front();
}

inline PeterssonReport petersson_check(const EigenBasis& B, u64 m, u64 n, u64 c_max)
{
    auto r = petersson_rhs(B.q, m, n, c_max);
    r.lhs = petersson_lhs(B, m, n);
    return r;
}

// ---------------------------------------------------------------------------
// Moments

inline double harmonic_moment(const EigenBasis& B, const std::vector<double>& values, int n)
{
    if (values.size() != B.forms.size()) throw InputError("harmonic_moment: one value per form required");
    if (n < 1) throw InputError("harmonic_moment: n must be >= 1");
    CompensatedSum acc;
    for (std::size_t i = 0; i < values.size(); ++i) acc += B.forms[i].omega * std::pow(values[i], n);
    return acc.value();
}

// C_n (log log q)^{n/2}, C_n = n!/((n/2)!(2π)^n) for even n.
inline double moment_constant(int n)
{
    if (n % 2) return 0;
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(n / 2 + 1.0) - n * std::log(2 * pi));
}

inline double predicted_moment(int n, u64 q)
{
    if (q < 16) throw InputError("predicted_moment: q must be >= 16");
    return moment_constant(n) * std::pow(std::log(std::log(double(q))), n / 2.0);
}

// x = q^{δ/3}
inline double selberg_x(u64 q, double delta) { return std::pow(double(q), delta / 3); }

struct MomentOracle {
    double value = 0;
    double diagonal = 0;        // Σ_f ω_f λ_f(N) replaced by δ_{N,1}
    double off_diag_budget = 0; // Σ_N |coef_N| · 10 · Lemma 2.3 scale
    std::size_t tuples = 0;     // prime multisets expanded
    std::size_t distinct_N = 0;
    bool lemma_precondition = true;
};

inline constexpr std::size_t moment_tuple_limit = 10'000'000;

// Σ_f ω_f M(t,f)^n by expanding M^n over prime multisets, reducing
// λ(p)^k = Σ_j h_{k,j} λ(p^j) and pairing the result with the weights.
inline MomentOracle model_moment_oracle(const EigenBasis& B, int n, double t, double delta)
{
    if (n < 1 || n > 8) throw InputError("model_moment_oracle: n must be in [1, 8]");
    if (!(delta > 0 && delta < 1)) throw InputError("model_moment_oracle: delta must be in (0, 1)");
    double x = selberg_x(B.q, delta);
    u64 X = u64(std::floor(x * x * x + 1e-9));
    std::vector<u64> ps;
    if (X >= 2)
        for (u64 p : sieve_primes(X).primes()) ps.push_back(p);
    const std::size_t np = ps.size();
    // multisets of size n from np primes
    double count = np == 0 ? 0 : std::exp(std::lgamma(double(np + n)) - std::lgamma(double(n + 1)) - std::lgamma(double(np)));
    if (count > double(moment_tuple_limit))
        throw InputError("model_moment_oracle: " + fmt15(count) + " tuples exceed the limit; use a smaller delta");
    for (const auto& f : B.forms)
        if (X > f.p_max()) throw InputError("model_moment_oracle: eigenvalues needed up to " + std::to_string(X));

    std::vector<double> sp(np);
    for (std::size_t i = 0; i < np; ++i) sp[i] = std::sin(t * std::log(double(ps[i]))) / std::sqrt(double(ps[i]));

    // h[k][j]: λ(p)^k = Σ_j h[k][j] λ(p^j), from λ(p)λ(p^j) = λ(p^{j+1}) + λ(p^{j−1}) (j ≥ 1)
    std::vector<std::vector<double>> h(n + 1, std::vector<double>(n + 2, 0.0));
    h[0][0] = 1;
    for (int k = 1; k <= n; ++k)
        for (int j = 0; j < k; ++j) {
            double c = h[k - 1][j];
            if (c == 0) continue;
            h[k][j + 1] += c;
            if (j >= 1) h[k][j - 1] += c;
        }

    std::map<std::vector<int>, double> coef; // exponent vector over ps → coefficient
    MomentOracle out;
    std::vector<int> k(np, 0);
    const double lognfact = std::lgamma(n + 1.0);
    // enumerate multisets as nonincreasing index sequences
    std::vector<std::size_t> idx(n, 0);
    if (np > 0) {
        for (;;) {
            std::fill(k.begin(), k.end(), 0);
            for (int i = 0; i < n; ++i) ++k[idx[i]];
            ++out.tuples;
            double w = lognfact;
            double sgn = 1, mag = 0;
            for (std::size_t i = 0; i < np; ++i) {
                if (!k[i]) continue;
                w -= std::lgamma(k[i] + 1.0);
                double s = std::pow(sp[i], k[i]);
                if (s < 0) sgn = -sgn;
                if (s == 0) { sgn = 0; break; }
                mag += std::log(std::fabs(s));
            }
            double base = sgn == 0 ? 0.0 : sgn * std::exp(w + mag);
            // expand Π_p Σ_j h[k_p][j] λ(p^j)
            std::vector<std::pair<std::vector<int>, double>> terms{{std::vector<int>(np, 0), base}};
            for (std::size_t i = 0; i < np; ++i) {
                if (!k[i]) continue;
                std::vector<std::pair<std::vector<int>, double>> next;
                for (auto& [e, c] : terms)
                    for (int j = 0; j <= k[i]; ++j) {
                        double hj = h[k[i]][j];
                        if (hj == 0) continue;
                        auto e2 = e;
                        e2[i] = j;
                        next.push_back({std::move(e2), c * hj});
                    }
                terms = std::move(next);
            }
            for (auto& [e, c] : terms) coef[e] += c;
            // advance: idx nondecreasing
            int pos = n - 1;
            while (pos >= 0 && idx[pos] == np - 1) --pos;
            if (pos < 0) break;
            ++idx[pos];
            for (int i = pos + 1; i < n; ++i) idx[i] = idx[pos];
        }
    }
    const double scale = std::pow(-1 / pi, n);
    CompensatedSum val, diag, budget;
    for (const auto& [e, c] : coef) {
        bool trivial = std::all_of(e.begin(), e.end(), [](int v) { return v == 0; });
        // A(N) = Σ_f ω_f λ_f(N) with N = Π p^{e_p}
        CompensatedSum A;
        for (const auto& f : B.forms) {
            double prod = 1;
            for (std::size_t i = 0; i < np; ++i) {
                if (!e[i]) continue;
                double lp = f.lambda_p(ps[i]);
                double prev = 1, cur = lp;
                for (int j = 2; j <= e[i]; ++j) {
                    double nx = lp * cur - prev;
                    prev = cur;
                    cur = nx;
                }
                prod *= cur;
            }
            A += f.omega * prod;
        }
        val += scale * c * A.value();
        if (trivial) diag += scale * c;
        double logN = 0;
        for (std::size_t i = 0; i < np; ++i) logN += e[i] * std::log(double(ps[i]));
        double sqrtN = std::exp(logN / 2);
        budget += std::fabs(scale * c) * 10 * std::pow(double(B.q), -1.5) * sqrtN / std::sqrt(2.0);
        if (6 * pi * sqrtN > double(B.q)) out.lemma_precondition = false;
    }
    out.value = val.value();
    out.diagonal = diag.value();
    out.off_diag_budget = budget.value();
    out.distinct_N = coef.size();
    return out;
}

// (1/π²) Σ_{p≤X} sin²(t log p)/p
inline double m_second_moment_diagonal(u64 q, double t, double delta)
{
    double x = selberg_x(q, delta);
    u64 X = u64(std::floor(x * x * x + 1e-9));
    CompensatedSum acc;
    if (X >= 2)
        for (u64 p : sieve_primes(X).primes()) {
            double s = std::sin(t * std::log(double(p)));
            acc += s * s / double(p);
        }
    return acc.value() / (pi * pi);
}

// ---------------------------------------------------------------------------
// Distribution μ_q

struct DistributionSample {
    int form_id;
    double xi;     // S(t,f)/√(log log q)
    double weight; // ω_f
};

struct DistributionReport {
    u64 q = 0;
    double t = 0;
    std::vector<DistributionSample> samples; // sorted by (xi, form_id)
    double total_weight = 0;
    double ks_distance = 0;
    std::vector<double> moments; // ∫ξ^n dμ_q, n = 1..6
    double mean() const { return moments.at(0); }
    double variance() const { return moments.at(1) - moments.at(0) * moments.at(0); }
};

inline constexpr double gaussian_variance = 1 / (2 * pi * pi);

inline double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2 * gaussian_variance)); }

inline DistributionReport distribution_mu_q(const EigenBasis& B, double t, const std::vector<double>& s_values)
{
    if (s_values.size() != B.forms.size()) throw InputError("distribution_mu_q: one S value per form required");
    std::string missing;
    for (std::size_t i = 0; i < s_values.size(); ++i)
        if (!std::isfinite(s_values[i])) missing += " " + std::to_string(B.forms[i].id);
    if (!missing.empty()) throw InputError("distribution_mu_q: S missing for forms" + missing);
    if (B.q < 16) throw InputError("distribution_mu_q: q must be >= 16");
    DistributionReport r;
    r.q = B.q;
    r.t = t;
    double scale = std::sqrt(std::log(std::log(double(B.q))));
    CompensatedSum tw;
    for (std::size_t i = 0; i < s_values.size(); ++i) {
        r.samples.push_back({B.forms[i].id, s_values[i] / scale, B.forms[i].omega});
        tw += B.forms[i].omega;
    }
    r.total_weight = tw.value();
    std::sort(r.samples.begin(), r.samples.end(), [](const auto& a, const auto& b) {
        return a.xi != b.xi ? a.xi < b.xi : a.form_id < b.form_id;
    });
    // right-continuous weighted CDF against the Gaussian, checked on both sides of each jump
    CompensatedSum cum;
    double ks = 0;
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        double G = gaussian_cdf(r.samples[i].xi);
        ks = std::max(ks, std::fabs(cum.value() / r.total_weight - G));
        cum += r.samples[i].weight;
        if (i + 1 < r.samples.size() && r.samples[i + 1].xi == r.samples[i].xi) continue;
        ks = std::max(ks, std::fabs(cum.value() / r.total_weight - G));
    }
    r.ks_distance = std::min(1.0, ks);
    for (int n = 1; n <= 6; ++n) {
        CompensatedSum m;
        for (const auto& s : r.samples) m += s.weight * std::pow(s.xi, n);
        r.moments.push_back(m.value() / r.total_weight);
    }
    return r;
}

} // namespace sfarg
