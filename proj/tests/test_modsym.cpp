#include <gtest/gtest.h>

#include <algorithm>

#include "sfarg/modsym.hpp"

using namespace sfarg;

namespace {

double trace(const RationalMatrix& T)
{
    i64 s = 0;
    for (int i = 0; i < T.n; ++i) s += T(i, i);
    return double(s) / double(T.den);
}

std::vector<__int128> product(const RationalMatrix& A, const RationalMatrix& B)
{
    std::vector<__int128> C(std::size_t(A.n) * A.n, 0);
    for (int i = 0; i < A.n; ++i)
        for (int k = 0; k < A.n; ++k)
            for (int j = 0; j < A.n; ++j) C[std::size_t(i) * A.n + j] += __int128(A(i, k)) * B(k, j);
    return C;
}

} // namespace

TEST(Dimension, GenusFormula)
{
    EXPECT_EQ(dimension(2), 0);
    EXPECT_EQ(dimension(11), 1);
    EXPECT_EQ(dimension(13), 0);
    EXPECT_EQ(dimension(37), 2);
    EXPECT_EQ(dimension(101), 8);
    EXPECT_EQ(dimension(2003), 167);
    EXPECT_THROW(dimension(15), InputError);
}

TEST(Space, SmallLevels)
{
    auto s11 = build_space(11);
    EXPECT_EQ(s11.num_symbols(), 12);
    EXPECT_EQ(s11.cuspidal_dim, 1);
    EXPECT_EQ(build_space(2).cuspidal_dim, 0);
    EXPECT_EQ(build_space(3).cuspidal_dim, 0);
    EXPECT_EQ(build_space(13).cuspidal_dim, 0);
    EXPECT_EQ(build_space(101).cuspidal_dim, 8);
    EXPECT_THROW(build_space(21), InputError);
    EXPECT_THROW(build_space(5011), InputError);
}

TEST(Space, GenusAcrossPrimes)
{
    for (u64 q = 2; q < 600; ++q) {
        if (!is_prime_u64(q)) continue;
        auto S = build_space(q);
        ASSERT_EQ(S.cuspidal_dim, dimension(q)) << q;
    }
}

TEST(Heilbronn, CremonaMatchesMerel)
{
    for (u64 q : {11u, 37u, 43u, 67u, 101u})
        for (u64 p : {2u, 3u, 5u, 7u, 13u}) {
            auto S = build_space(q);
            auto a = apply_on_cusp(S, heilbronn_cremona(i64(p)));
            auto b = apply_on_cusp(S, heilbronn_merel(i64(p)));
            ASSERT_EQ(a.num, b.num) << q << " " << p;
        }
}

TEST(Hecke, Level11)
{
    auto S = build_space(11);
    const std::pair<u64, double> ap[] = {{2, -2}, {3, -1}, {5, 1}, {7, -2}, {13, 4}, {17, -2}, {19, 0}, {23, -1}};
    for (auto [p, a] : ap) EXPECT_DOUBLE_EQ(trace(hecke_matrix(S, p)), a) << p;
    // a_11 = −w_11 = +1
    EXPECT_DOUBLE_EQ(trace(atkin_lehner_matrix(S)), -1.0);
    EXPECT_THROW(hecke_matrix(S, 11), InputError);
}

TEST(Hecke, Level37)
{
    auto S = build_space(37);
    // 37a: a2=−2 a3=−3 a5=−2 a7=−1;  37b: a2=0 a3=1 a5=0 a7=−1
    EXPECT_DOUBLE_EQ(trace(hecke_matrix(S, 2)), -2);
    EXPECT_DOUBLE_EQ(trace(hecke_matrix(S, 3)), -2);
    EXPECT_DOUBLE_EQ(trace(hecke_matrix(S, 5)), -2);
    EXPECT_DOUBLE_EQ(trace(hecke_matrix(S, 7)), -2);
    // w_37 = +1 on 37a (rank one), −1 on 37b
    EXPECT_DOUBLE_EQ(trace(atkin_lehner_matrix(S)), 0);
}

TEST(Hecke, IntegralTraceAndCommutativity)
{
    for (u64 q : {67u, 101u, 199u}) {
        auto S = build_space(q);
        std::vector<RationalMatrix> T;
        for (u64 p : {2u, 3u, 5u, 7u}) T.push_back(hecke_matrix(S, p));
        T.push_back(atkin_lehner_matrix(S));
        for (auto& A : T) {
            double tr = trace(A);
            EXPECT_EQ(tr, std::round(tr)) << q;
        }
        for (std::size_t i = 0; i < T.size(); ++i)
            for (std::size_t j = i + 1; j < T.size(); ++j) EXPECT_TRUE(product(T[i], T[j]) == product(T[j], T[i]));
    }
}
