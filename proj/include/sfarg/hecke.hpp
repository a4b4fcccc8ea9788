#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "afe.hpp"
#include "modsym.hpp"

namespace sfarg {

struct HeckeEigenform {
    u64 q = 0;
    int id = 0;
    int epsilon = 0;
    double omega = 0;
    double sym2_l1 = 0;
    // λ_f(p) for every prime p ≤ P_max, q included
    std::vector<std::uint32_t> primes;
    std::vector<double> lambda;
    // every prime up to this bound is tabulated
    u64 table_limit = 0;

    u64 p_max() const { return table_limit; }

    double lambda_p(u64 p) const
    {
        auto it = std::lower_bound(primes.begin(), primes.end(), std::uint32_t(p));
        if (it == primes.end() || *it != p)
            throw InputError("lambda_p: prime " + std::to_string(p) + " not tabulated (P_max=" +
                             std::to_string(p_max()) + ")");
        return lambda[it - primes.begin()];
    }
};

enum class Provenance { computed, ingested };

struct EigenBasis {
    u64 q = 0;
    int dim = 0;
    u64 P_max = 0;
    std::vector<HeckeEigenform> forms;
    Provenance provenance = Provenance::computed;
};

// λ_f(p^{r+1}) = λ_f(p)λ_f(p^r) − χ_q(p)λ_f(p^{r−1})
inline double lambda_n(const HeckeEigenform& f, u64 n)
{
    if (n == 0) throw InputError("lambda_n: n must be >= 1");
    double r = 1;
    for (auto [p, e] : factorize(n)) {
        double lp = f.lambda_p(p);
        double chi = (p == f.q) ? 0.0 : 1.0;
        double prev = 1, cur = lp;
        for (int k = 2; k <= e; ++k) {
            double nx = lp * cur - chi * prev;
            prev = cur;
            cur = nx;
        }
        r *= cur;
    }
    return r;
}

// λ_f(n) for 1 ≤ n ≤ N (index 0 unused).
inline std::vector<double> lambda_table(const HeckeEigenform& f, std::size_t N)
{
    if (N > f.p_max()) throw InputError("lambda_table: need primes up to " + std::to_string(N));
    std::vector<double> lam(N + 1, 0.0);
    if (N == 0) return lam;
    lam[1] = 1;
    auto spf = smallest_factor_table(N);
    for (std::size_t n = 2; n <= N; ++n) {
        std::size_t p = spf[n], m = n, pk = 1;
        while (m % p == 0) { m /= p; pk *= p; }
        if (m > 1) {
            lam[n] = lam[pk] * lam[m];
        } else if (pk == p) {
            lam[n] = f.lambda_p(p);
        } else {
            double chi = (p == f.q) ? 0.0 : 1.0;
            lam[n] = lam[p] * lam[n / p] - chi * lam[n / p / p];
        }
    }
    return lam;
}

// ---------------------------------------------------------------------------
// L(s, sym² f)

inline std::vector<double> sym2_coefficients(const HeckeEigenform& f, std::size_t N)
{
    if (N > f.p_max()) throw InputError("sym2_coefficients: need primes up to " + std::to_string(N));
    std::vector<double> b(N + 1, 0.0);
    if (N == 0) return b;
    b[1] = 1;
    auto spf = smallest_factor_table(N);
    for (std::size_t n = 2; n <= N; ++n) {
        std::size_t p = spf[n], m = n, pk = 1;
        int k = 0;
        while (m % p == 0) { m /= p; pk *= p; ++k; }
        if (m > 1) {
            b[n] = b[pk] * b[m];
            continue;
        }
        if (p == f.q) {
            b[n] = std::pow(double(p), -k);
            continue;
        }
        double l = f.lambda_p(p);
        double l2 = l * l - 1; // λ(p²)
        double b1 = k >= 2 ? b[n / p] : 1.0;
        double b2 = k >= 3 ? b[n / p / p] : (k == 2 ? 1.0 : 0.0);
        double b3 = k >= 4 ? b[n / p / p / p] : (k == 3 ? 1.0 : 0.0);
        b[n] = l2 * b1 - l2 * b2 + b3;
    }
    return b;
}

inline SelfDualL sym2_shape(u64 q)
{
    SelfDualL L;
    L.conductor = double(q) * double(q);
    L.gamma = {{false, 1.0}, {true, 1.0}};
    L.root_number = 1;
    L.coeff_exponent = 1.0 / 3;
    L.coeff_const = divisor_bound_constant(3, L.coeff_exponent);
    return L;
}

struct Sym2Result {
    double value = 0;
    double abs_error_bound = 0;
    std::size_t terms = 0;
};

inline double sym2_target = 1e-10;

inline std::size_t sym2_required_terms(u64 q)
{
    AfeOptions o;
    o.target_abs_error = sym2_target;
    return afe_required_terms(sym2_shape(q), 1.0, o);
}

inline Sym2Result sym2_l1(const HeckeEigenform& f)
{
    auto L = sym2_shape(f.q);
    AfeOptions o;
    o.target_abs_error = sym2_target;
    std::size_t need = afe_required_terms(L, 1.0, o);
    L.a = sym2_coefficients(f, need);
    auto r = afe_evaluate(L, 1.0, o);
    if (!(r.value.real() > 0)) throw NumericalError("sym2_l1: non-positive value for form " + std::to_string(f.id));
    return {r.value.real(), r.tail_bound, need};
}

// Euler product to P, with the size of the omitted prime sum Σ_{P<p≤2P} λ(p²)/p as a tail indicator.
struct Sym2EulerResult {
    double value = 0;
    double tail_estimate = 0;
};

inline Sym2EulerResult sym2_l1_euler(const HeckeEigenform& f, u64 P)
{
    if (P > f.p_max()) throw InputError("sym2_l1_euler: P beyond tabulated primes");
    CompensatedSum lg;
    CompensatedSum tail;
    for (std::size_t i = 0; i < f.primes.size(); ++i) {
        double p = f.primes[i];
        if (f.primes[i] == f.q) {
            if (f.primes[i] <= P) lg += -std::log1p(-1.0 / (p * p));
            continue;
        }
        double l2 = f.lambda[i] * f.lambda[i] - 1;
        if (f.primes[i] <= P) {
            double x = 1.0 / p;
            lg += -std::log(1 - l2 * x + l2 * x * x - x * x * x);
        } else if (f.primes[i] <= 2 * P) {
            tail += l2 / p;
        }
    }
    return {std::exp(lg.value()), std::fabs(tail.value())};
}

enum class WeightFormula { exact, asymptotic };

// ω_f.  exact: 2π²/(q L(1,sym²f)), the Petersson normalisation for prime level.
// asymptotic: ζ(2)/(dim L(1,sym²f)), dropping the 1+O(log⁴q/q) factor.
inline double harmonic_weight(const HeckeEigenform& f, int dim, WeightFormula w = WeightFormula::exact)
{
    if (dim < 1) throw InputError("harmonic_weight: dim must be >= 1");
    if (!(f.sym2_l1 > 0)) throw InputError("harmonic_weight: sym2_l1 not computed");
    if (w == WeightFormula::asymptotic) return (pi * pi / 6) / (dim * f.sym2_l1);
    return 2 * pi * pi / (double(f.q) * f.sym2_l1);
}

// ---------------------------------------------------------------------------
// Diagonalisation

struct DiagonalizeOptions {
    // primes whose Hecke matrices enter the random combination, in this order
    std::vector<u64> split_primes;
    std::uint64_t seed = 20240501;
    double separation = 1e-6;
};

namespace detail {

inline Eigen::MatrixXd to_dense(const RationalMatrix& T)
{
    Eigen::MatrixXd M(T.n, T.n);
    for (int r = 0; r < T.n; ++r)
        for (int c = 0; c < T.n; ++c) M(r, c) = double(T(r, c)) / double(T.den);
    return M;
}

inline Eigen::VectorXd real_normalised(const Eigen::VectorXcd& v)
{
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    Eigen::VectorXcd w = v / v(k);
    return w.real();
}

} // namespace detail

// Round a value through the 15-significant-digit interchange format, so freshly
// computed and cache-loaded bases are bit-identical.
inline double canonical(double x) { return std::stod(fmt15(x)); }

inline EigenBasis diagonalize(const ManinSymbolSpace& S, u64 P_max, DiagonalizeOptions opt = {})
{
    if (P_max < 97) throw InputError("diagonalize: P_max must be >= 97");
    EigenBasis B;
    B.q = S.q;
    B.dim = S.cuspidal_dim;
    B.P_max = P_max;
    const int g = S.cuspidal_dim;
    if (g == 0) return B;

    if (opt.split_primes.empty())
        for (u64 p = 2; opt.split_primes.size() < 8; ++p)
            if (is_prime_u64(p) && p != S.q) opt.split_primes.push_back(p);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> coef(0.5, 1.5);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g, g);
    for (u64 p : opt.split_primes) A += coef(rng) * detail::to_dense(hecke_matrix(S, p));

    Eigen::EigenSolver<Eigen::MatrixXd> right(A), left(A.transpose());
    if (right.info() != Eigen::Success || left.info() != Eigen::Success)
        throw NumericalError("diagonalize: eigen solver failed at q=" + std::to_string(S.q));
    std::vector<double> ev(g), lev(g);
    for (int i = 0; i < g; ++i) {
        ev[i] = right.eigenvalues()(i).real();
        lev[i] = left.eigenvalues()(i).real();
    }
    for (int i = 0; i < g; ++i)
        for (int j = i + 1; j < g; ++j)
            if (std::fabs(ev[i] - ev[j]) < opt.separation)
                throw NumericalError("diagonalize: eigensystems " + std::to_string(i) + " and " + std::to_string(j) +
                                     " not separated at q=" + std::to_string(S.q));

    // pair left and right eigenvectors by eigenvalue
    Eigen::MatrixXd V(g, g), Lt(g, g);
    for (int i = 0; i < g; ++i) {
        int best = 0;
        for (int j = 1; j < g; ++j)
            if (std::fabs(lev[j] - ev[i]) < std::fabs(lev[best] - ev[i])) best = j;
        V.col(i) = detail::real_normalised(right.eigenvectors().col(i));
        Lt.col(i) = detail::real_normalised(left.eigenvectors().col(best));
    }
    // Φ(s, f) = ℓ_f(x_s) for every Manin symbol s
    const int ns = S.num_symbols();
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(ns, g);
    for (int s = 0; s < ns; ++s)
        S.for_each_cusp_coord(s, [&](int r, i64 v) { Phi.row(s) += (double(v) / double(S.denominator)) * Lt.row(r); });

    // choose a few symbols so every form sees a well-conditioned ℓ_f(x_s)
    std::vector<int> assigned(g, -1), chosen;
    {
        Eigen::VectorXd best = Eigen::VectorXd::Zero(g);
        for (int s = 0; s < ns; ++s)
            if (s != int(S.q) && s != 0)
                for (int f = 0; f < g; ++f) best(f) = std::max(best(f), std::fabs(Phi(s, f)));
        while (std::count(assigned.begin(), assigned.end(), -1) > 0) {
            int bs = -1, bc = -1;
            for (int s = 1; s < int(S.q); ++s) {
                int cnt = 0;
                for (int f = 0; f < g; ++f)
                    if (assigned[f] < 0 && std::fabs(Phi(s, f)) >= 0.25 * best(f)) ++cnt;
                if (cnt > bc) { bc = cnt; bs = s; }
            }
            chosen.push_back(bs);
            for (int f = 0; f < g; ++f)
                if (assigned[f] < 0 && std::fabs(Phi(bs, f)) >= 0.25 * best(f)) assigned[f] = bs;
        }
    }

    auto primes = sieve_primes(std::max<u64>(P_max, 2));
    std::vector<std::vector<double>> ap(g, std::vector<double>(primes.size(), 0.0));
    for (std::size_t i = 0; i < primes.size(); ++i) {
        u64 p = primes[i];
        if (p == S.q) continue;
        auto H = heilbronn_cremona(i64(p));
        for (int s : chosen) {
            auto hist = heilbronn_image_counts(S, s, H);
            for (int f = 0; f < g; ++f) {
                if (assigned[f] != s) continue;
                CompensatedSum acc;
                for (int k = 0; k < ns; ++k)
                    if (hist[k]) acc += double(hist[k]) * Phi(k, f);
                ap[f][i] = acc.value() / Phi(s, f);
            }
        }
    }
    // W_q eigenvalue; a_q = −w_q
    Eigen::MatrixXd W = detail::to_dense(atkin_lehner_matrix(S));
    std::vector<double> wq(g);
    for (int f = 0; f < g; ++f) wq[f] = Lt.col(f).dot(W * V.col(f)) / Lt.col(f).dot(V.col(f));

    for (int f = 0; f < g; ++f) {
        HeckeEigenform F;
        F.q = S.q;
        F.primes = primes.primes();
        F.table_limit = P_max;
        F.lambda.resize(primes.size());
        for (std::size_t i = 0; i < primes.size(); ++i) {
            double p = primes[i];
            double a = primes[i] == S.q ? -wq[f] : ap[f][i];
            if (primes[i] != S.q && std::fabs(a) > 2 * std::sqrt(p) + 1e-6)
                throw NumericalError("diagonalize: Deligne bound violated at q=" + std::to_string(S.q) +
                                     " p=" + std::to_string(primes[i]));
            F.lambda[i] = canonical(a / std::sqrt(p));
        }
        if (std::fabs(std::fabs(wq[f]) - 1) > 1e-6)
            throw NumericalError("diagonalize: Atkin-Lehner eigenvalue not ±1 at q=" + std::to_string(S.q));
        F.epsilon = -int(std::lround(wq[f]));
        B.forms.push_back(std::move(F));
    }
    // deterministic order: lexicographic in (λ(2), λ(3), ...)
    std::sort(B.forms.begin(), B.forms.end(), [](const HeckeEigenform& a, const HeckeEigenform& b) {
        for (std::size_t i = 0; i < a.lambda.size(); ++i)
            if (std::fabs(a.lambda[i] - b.lambda[i]) > 1e-9) return a.lambda[i] < b.lambda[i];
        return false;
    });
    for (int f = 0; f < g; ++f) B.forms[f].id = f;
    for (int f = 0; f < g; ++f)
        for (int h = f + 1; h < g; ++h) {
            double d = 0;
            for (std::size_t i = 0; i < B.forms[f].lambda.size(); ++i)
                d = std::max(d, std::fabs(B.forms[f].lambda[i] - B.forms[h].lambda[i]));
            if (d < opt.separation)
                throw NumericalError("diagonalize: forms " + std::to_string(f) + " and " + std::to_string(h) +
                                     " collide at q=" + std::to_string(S.q));
        }
    return B;
}

// L(1,sym²f) and ω_f for every form.
inline void attach_weights(EigenBasis& B)
{
    for (auto& f : B.forms) {
        f.sym2_l1 = canonical(sym2_l1(f).value);
        f.omega = canonical(harmonic_weight(f, B.dim));
    }
}

// ---------------------------------------------------------------------------
// Cache: cache/basis/q=<q>.json

inline nlohmann::json basis_to_json(const EigenBasis& B)
{
    nlohmann::json j;
    j["q"] = B.q;
    j["dim"] = B.dim;
    j["P_max"] = B.P_max;
    j["forms"] = nlohmann::json::array();
    for (const auto& f : B.forms) {
        nlohmann::json jf;
        jf["id"] = f.id;
        jf["epsilon"] = f.epsilon;
        jf["omega"] = fmt15(f.omega);
        jf["sym2_l1"] = fmt15(f.sym2_l1);
        auto lam = nlohmann::json::array();
        for (std::size_t i = 0; i < f.primes.size(); ++i) lam.push_back({f.primes[i], fmt15(f.lambda[i])});
        jf["lambda"] = std::move(lam);
        j["forms"].push_back(std::move(jf));
    }
    return j;
}

inline EigenBasis basis_from_json(const nlohmann::json& j)
{
    EigenBasis B;
    try {
        B.q = j.at("q").get<u64>();
        B.dim = j.at("dim").get<int>();
        B.P_max = j.at("P_max").get<u64>();
        for (const auto& jf : j.at("forms")) {
            HeckeEigenform f;
            f.q = B.q;
            f.id = jf.at("id").get<int>();
            f.epsilon = jf.at("epsilon").get<int>();
            f.omega = std::stod(jf.at("omega").get<std::string>());
            f.sym2_l1 = std::stod(jf.at("sym2_l1").get<std::string>());
            f.table_limit = B.P_max;
            for (const auto& e : jf.at("lambda")) {
                f.primes.push_back(e.at(0).get<std::uint32_t>());
                f.lambda.push_back(std::stod(e.at(1).get<std::string>()));
            }
            B.forms.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("basis cache: malformed document: ") + e.what());
    }
    if (int(B.forms.size()) != B.dim) throw InputError("basis cache: form count differs from dim");
    return B;
}

inline std::filesystem::path basis_cache_path(const std::filesystem::path& cache_dir, u64 q)
{
    return cache_dir / "basis" / ("q=" + std::to_string(q) + ".json");
}

inline void save_basis(const EigenBasis& B, const std::filesystem::path& cache_dir)
{
    auto path = basis_cache_path(cache_dir, B.q);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << basis_to_json(B).dump(1) << "\n";
    if (!out) throw InputError("cannot write " + path.string());
}

inline std::optional<EigenBasis> load_basis(const std::filesystem::path& cache_dir, u64 q, u64 min_P_max = 0)
{
    auto path = basis_cache_path(cache_dir, q);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("basis cache " + path.string() + ": " + e.what());
    }
    auto B = basis_from_json(j);
    if (B.P_max < min_P_max) return std::nullopt;
    return B;
}

} // namespace sfarg
