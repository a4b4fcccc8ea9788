#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "arith.hpp"

namespace sfarg {

inline constexpr u64 default_q_max = 5003;

// dim S_2(Γ0(q)) = genus of X0(q), q prime.
inline int dimension(u64 q)
{
    if (!is_prime_u64(q)) throw InputError("dimension: q=" + std::to_string(q) + " is not prime");
    if (q <= 3) return 0;
    int nu2 = 1 + (q % 4 == 1 ? 1 : -1);
    int nu3 = 1 + (q % 3 == 1 ? 1 : -1);
    // g = 1 + μ/12 − ν2/4 − ν3/3 − ν∞/2 with μ = q+1, ν∞ = 2; exact in twelfths
    int twelve_g = 12 + int(q + 1) - 3 * nu2 - 4 * nu3 - 12;
    return twelve_g / 12;
}

using Heilbronn = std::array<i64, 4>; // [[a,b],[c,d]] row-major

// Cremona's Heilbronn matrices of determinant p.
inline std::vector<Heilbronn> heilbronn_cremona(i64 p)
{
    std::vector<Heilbronn> out;
    if (p == 2) return {{1, 0, 0, 2}, {2, 0, 0, 1}, {2, 1, 0, 1}, {1, 0, 1, 2}};
    out.push_back({1, 0, 0, p});
    for (i64 r = -(p - 1) / 2; r <= (p - 1) / 2; ++r) {
        i64 x1 = p, x2 = -r, y1 = 0, y2 = 1, a = -p, b = r;
        out.push_back({x1, x2, y1, y2});
        while (b != 0) {
            // nearest integer to a/b, halves rounded toward zero
            i64 aa = a < 0 ? -a : a, bb = b < 0 ? -b : b;
            i64 qq = aa / bb;
            if (2 * (aa % bb) > bb) ++qq;
            if ((a < 0) != (b < 0)) qq = -qq;
            i64 c = a - b * qq;
            a = -b;
            b = c;
            i64 x3 = qq * x2 - x1;
            x1 = x2;
            x2 = x3;
            i64 y3 = qq * y2 - y1;
            y1 = y2;
            y2 = y3;
            out.push_back({x1, x2, y1, y2});
        }
    }
    return out;
}

// Merel's set {ad − bc = n, a > b ≥ 0, d > c ≥ 0}; quadratic, kept as a reference.
inline std::vector<Heilbronn> heilbronn_merel(i64 n)
{
    std::vector<Heilbronn> out;
    for (i64 a = 1; a <= n; ++a)
        for (i64 d = 1; d <= n; ++d)
            for (i64 b = 0; b < a; ++b)
                for (i64 c = 0; c < d; ++c)
                    if (a * d - b * c == n) out.push_back({a, b, c, d});
    return out;
}

namespace detail {

inline constexpr u64 big_prime = (u64(1) << 61) - 1;

inline u64 mm61(u64 a, u64 b) { return u64((unsigned __int128)a * b % big_prime); }

inline u64 pow61(u64 a, u64 e)
{
    u64 r = 1;
    while (e) {
        if (e & 1) r = mm61(r, a);
        a = mm61(a, a);
        e >>= 1;
    }
    return r;
}

inline u64 to61(i64 x) { return x >= 0 ? u64(x) % big_prime : big_prime - (u64(-x) % big_prime); }

// n/d ≡ a (mod 2^61−1) with |n|, d below sqrt(P/2); false if none exists.
inline bool rational_reconstruct(u64 a, i64& num, i64& den)
{
    const i64 bound = 1'000'000'000;
    i64 r0 = i64(big_prime), r1 = i64(a), t0 = 0, t1 = 1;
    while (r1 > bound) {
        i64 qq = r0 / r1;
        std::tie(r0, r1) = std::make_pair(r1, r0 - qq * r1);
        std::tie(t0, t1) = std::make_pair(t1, t0 - qq * t1);
    }
    if (t1 == 0 || std::llabs(t1) > bound) return false;
    num = t1 < 0 ? -r1 : r1;
    den = std::llabs(t1);
    if (std::gcd(num, den) != 1) return false;
    return true;
}

} // namespace detail

struct RelationEntry {
    int row;
    int symbol;
    int coeff;
};

// Plus-quotient of weight-2 Manin symbols for Γ0(q), q prime.
class ManinSymbolSpace {
public:
    u64 q = 0;
    int cuspidal_dim = 0;
    // Coordinates are integers over the common denominator.
    i64 denominator = 1;
    std::vector<int> basis_symbols;
    int eisenstein_basis = -1;
    // basis index -> cuspidal coordinate, −1 for the Eisenstein direction
    std::vector<int> cusp_index;
    std::vector<std::vector<std::pair<int, i64>>> coords;
    std::vector<RelationEntry> relation_matrix;
    std::vector<i64> inverse; // inverses mod q

    int num_symbols() const { return int(q) + 1; }
    int total_dim() const { return int(basis_symbols.size()); }

    int symbol_index(i64 c, i64 d) const
    {
        i64 qq = i64(q);
        c = mod(c, qq);
        d = mod(d, qq);
        if (c == 0) return int(q);
        return int(d * inverse[c] % qq);
    }
    std::pair<i64, i64> symbol(int idx) const
    {
        return idx == int(q) ? std::pair<i64, i64>{0, 1} : std::pair<i64, i64>{1, idx};
    }
    // Cuspidal coordinates of a symbol; the Eisenstein component is dropped.
    template <class F>
    void for_each_cusp_coord(int sym, F&& f) const
    {
        for (auto [j, v] : coords[sym])
            if (cusp_index[j] >= 0) f(cusp_index[j], v);
    }
};

inline ManinSymbolSpace build_space(u64 q, u64 q_max = default_q_max)
{
    if (!is_prime_u64(q)) throw InputError("build_space: q=" + std::to_string(q) + " is not prime");
    if (q > q_max) throw InputError("build_space: q exceeds q_max=" + std::to_string(q_max));
    ManinSymbolSpace S;
    S.q = q;
    const int n = int(q) + 1;
    const i64 qq = i64(q);
    S.inverse.assign(q, 0);
    for (i64 a = 1; a < qq; ++a) S.inverse[a] = inverse_mod(a, qq);
    S.coords.assign(n, {});

    auto sigma = [&](int i) { auto [c, d] = S.symbol(i); return S.symbol_index(d, -c); };
    auto eta = [&](int i) { auto [c, d] = S.symbol(i); return S.symbol_index(-c, d); };
    auto tau = [&](int i) { auto [c, d] = S.symbol(i); return S.symbol_index(d, -c - d); };

    // 2-term relations: x = −xσ, x = xη. Signed components.
    std::vector<int> comp(n, -1), sign(n, 0);
    std::vector<bool> zero_comp;
    int ncomp = 0;
    int row = 0;
    for (int i = 0; i < n; ++i) {
        S.relation_matrix.push_back({row, i, 1});
        S.relation_matrix.push_back({row, sigma(i), 1});
        ++row;
        S.relation_matrix.push_back({row, i, 1});
        S.relation_matrix.push_back({row, eta(i), -1});
        ++row;
    }
    for (int i = 0; i < n; ++i) {
        if (comp[i] >= 0) continue;
        bool zero = false;
        std::vector<int> stack{i};
        comp[i] = ncomp;
        sign[i] = 1;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            std::pair<int, int> nb[2] = {{sigma(x), -sign[x]}, {eta(x), sign[x]}};
            for (auto [y, s] : nb) {
                if (comp[y] < 0) {
                    comp[y] = ncomp;
                    sign[y] = s;
                    stack.push_back(y);
                } else if (sign[y] != s) {
                    zero = true;
                }
            }
        }
        zero_comp.push_back(zero);
        ++ncomp;
    }
    std::vector<int> gen_of_comp(ncomp, -1), comp_rep;
    int ngen = 0;
    for (int i = 0; i < n; ++i)
        if (!zero_comp[comp[i]] && gen_of_comp[comp[i]] < 0) {
            gen_of_comp[comp[i]] = ngen++;
            comp_rep.push_back(i);
        }

    // 3-term relations in the generators, eliminated mod a large prime.
    std::vector<bool> seen(n, false);
    std::vector<std::vector<i64>> rel;
    for (int i = 0; i < n; ++i) {
        if (seen[i]) continue;
        int orbit[3] = {i, tau(i), tau(tau(i))};
        std::vector<i64> r(ngen, 0);
        bool nonzero = false;
        for (int k = 0; k < 3; ++k) {
            seen[orbit[k]] = true;
            S.relation_matrix.push_back({row, orbit[k], 1});
            int c = comp[orbit[k]];
            if (zero_comp[c]) continue;
            r[gen_of_comp[c]] += sign[orbit[k]];
            nonzero = true;
        }
        ++row;
        if (nonzero) rel.push_back(std::move(r));
    }

    const u64 P = detail::big_prime;
    std::vector<std::vector<u64>> M(rel.size(), std::vector<u64>(ngen));
    for (std::size_t r = 0; r < rel.size(); ++r)
        for (int j = 0; j < ngen; ++j) M[r][j] = detail::to61(rel[r][j]);
    std::vector<int> pivot_row_of(ngen, -1);
    std::size_t rank = 0;
    for (int col = 0; col < ngen && rank < M.size(); ++col) {
        std::size_t piv = rank;
        while (piv < M.size() && M[piv][col] == 0) ++piv;
        if (piv == M.size()) continue;
        std::swap(M[piv], M[rank]);
        u64 inv = detail::pow61(M[rank][col], P - 2);
        for (int j = col; j < ngen; ++j) M[rank][j] = detail::mm61(M[rank][j], inv);
        for (std::size_t r = 0; r < M.size(); ++r) {
            if (r == rank || M[r][col] == 0) continue;
            u64 f = M[r][col];
            for (int j = col; j < ngen; ++j) {
                if (M[rank][j] == 0) continue;
                M[r][j] = (M[r][j] + P - detail::mm61(f, M[rank][j])) % P;
            }
        }
        pivot_row_of[col] = int(rank);
        ++rank;
    }

    // Free generators form the basis; pivots are expressed through them.
    std::vector<int> basis_of_gen(ngen, -1);
    for (int j = 0; j < ngen; ++j)
        if (pivot_row_of[j] < 0) {
            basis_of_gen[j] = int(S.basis_symbols.size());
            S.basis_symbols.push_back(comp_rep[j]);
        }
    struct Frac { i64 num, den; };
    std::vector<std::vector<std::pair<int, Frac>>> expr(ngen);
    i64 D = 1;
    for (int j = 0; j < ngen; ++j) {
        if (pivot_row_of[j] < 0) {
            expr[j].push_back({basis_of_gen[j], {1, 1}});
            continue;
        }
        const auto& R = M[pivot_row_of[j]];
        for (int k = 0; k < ngen; ++k) {
            if (k == j || R[k] == 0) continue;
            i64 num, den;
            if (!detail::rational_reconstruct((P - R[k]) % P, num, den))
                throw NumericalError("build_space: rational reconstruction failed for q=" + std::to_string(q));
            expr[j].push_back({basis_of_gen[k], {num, den}});
            D = std::lcm(D, den);
            if (D > (i64(1) << 40)) throw NumericalError("build_space: denominator overflow");
        }
    }
    S.denominator = D;
    std::vector<std::vector<std::pair<int, i64>>> gen_coords(ngen);
    for (int j = 0; j < ngen; ++j)
        for (auto [b, f] : expr[j]) gen_coords[j].push_back({b, f.num * (D / f.den)});

    // exact check of every 3-term relation
    for (const auto& r : rel) {
        std::vector<__int128> acc(S.basis_symbols.size(), 0);
        for (int j = 0; j < ngen; ++j)
            if (r[j])
                for (auto [b, v] : gen_coords[j]) acc[b] += __int128(r[j]) * v;
        for (auto a : acc)
            if (a != 0) throw NumericalError("build_space: relation check failed for q=" + std::to_string(q));
    }

    for (int i = 0; i < n; ++i) {
        if (zero_comp[comp[i]]) continue;
        for (auto [b, v] : gen_coords[gen_of_comp[comp[i]]]) S.coords[i].push_back({b, sign[i] * v});
    }

    // boundary: only (0:1) and (1:0) carry a cusp difference
    int j0 = -1;
    for (auto [b, v] : S.coords[int(q)])
        if (v != 0) {
            if (j0 >= 0) throw NumericalError("build_space: boundary not concentrated on one basis vector");
            j0 = b;
        }
    if (j0 < 0) throw NumericalError("build_space: (0:1) vanished in the quotient");
    S.eisenstein_basis = j0;
    int k = 0;
    for (int b = 0; b < S.total_dim(); ++b) S.cusp_index.push_back(b == j0 ? -1 : k++);
    S.cuspidal_dim = k;
    if (S.cuspidal_dim != dimension(q))
        throw NumericalError("build_space: cuspidal dimension " + std::to_string(k) + " != genus " +
                             std::to_string(dimension(q)));
    return S;
}

// D·T_p on the cuspidal subspace, column j = image of the j-th cuspidal basis vector.
struct RationalMatrix {
    int n = 0;
    i64 den = 1;
    std::vector<i64> num; // row-major
    i64 operator()(int r, int c) const { return num[std::size_t(r) * n + c]; }
};

template <class Space>
inline std::vector<i64> heilbronn_image_counts(const Space& S, int sym, const std::vector<Heilbronn>& H)
{
    std::vector<i64> hist(S.num_symbols(), 0);
    auto [c, d] = S.symbol(sym);
    for (const auto& h : H) ++hist[S.symbol_index(c * h[0] + d * h[2], c * h[1] + d * h[3])];
    return hist;
}

inline RationalMatrix apply_on_cusp(const ManinSymbolSpace& S, const std::vector<Heilbronn>& H)
{
    RationalMatrix T;
    T.n = S.cuspidal_dim;
    T.den = S.denominator;
    T.num.assign(std::size_t(T.n) * T.n, 0);
    for (int b = 0; b < S.total_dim(); ++b) {
        int col = S.cusp_index[b];
        if (col < 0) continue;
        auto hist = heilbronn_image_counts(S, S.basis_symbols[b], H);
        for (int s = 0; s < S.num_symbols(); ++s)
            if (hist[s])
                S.for_each_cusp_coord(s, [&](int r, i64 v) { T.num[std::size_t(r) * T.n + col] += hist[s] * v; });
    }
    return T;
}

inline RationalMatrix hecke_matrix(const ManinSymbolSpace& S, u64 p)
{
    if (!is_prime_u64(p)) throw InputError("hecke_matrix: p=" + std::to_string(p) + " is not prime");
    if (p == S.q) throw InputError("hecke_matrix: p = q goes through the Atkin-Lehner path");
    return apply_on_cusp(S, heilbronn_cremona(i64(p)));
}

// {0, a/b} as a signed list of Manin symbols, via continued-fraction convergents.
inline std::vector<int> zero_to_cusp(const ManinSymbolSpace& S, i64 a, i64 b)
{
    if (b < 0) { a = -a; b = -b; }
    std::vector<int> out{int(S.q)}; // {0,∞}
    i64 pm2 = 0, pm1 = 1, qm2 = 1, qm1 = 0;
    i64 num = a, den = b;
    for (int j = 0;; ++j) {
        i64 aj = num >= 0 ? num / den : -((-num + den - 1) / den);
        i64 pj = aj * pm1 + pm2, qj = aj * qm1 + qm2;
        i64 sgn = (j % 2 == 0) ? -1 : 1; // (−1)^{j−1}
        out.push_back(S.symbol_index(qj, sgn * qm1));
        pm2 = pm1; pm1 = pj; qm2 = qm1; qm1 = qj;
        i64 rem = num - aj * den;
        if (rem == 0) break;
        num = den;
        den = rem;
    }
    return out;
}

// Atkin–Lehner W_q on the cuspidal subspace (exact integer over denominator).
inline RationalMatrix atkin_lehner_matrix(const ManinSymbolSpace& S)
{
    RationalMatrix W;
    W.n = S.cuspidal_dim;
    W.den = S.denominator;
    W.num.assign(std::size_t(W.n) * W.n, 0);
    for (int b = 0; b < S.total_dim(); ++b) {
        int col = S.cusp_index[b];
        if (col < 0) continue;
        int sym = S.basis_symbols[b];
        // W(1:d) = (0:1) − {0, d/q};  W(0:1) = −(0:1)
        std::vector<std::pair<int, int>> terms;
        if (sym == int(S.q)) {
            terms.push_back({sym, -1});
        } else {
            terms.push_back({int(S.q), 1});
            for (int s : zero_to_cusp(S, sym, i64(S.q))) terms.push_back({s, -1});
        }
        for (auto [s, m] : terms)
            S.for_each_cusp_coord(s, [&](int r, i64 v) { W.num[std::size_t(r) * W.n + col] += m * v; });
    }
    return W;
}

} // namespace sfarg
