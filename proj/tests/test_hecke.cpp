#include <gtest/gtest.h>

#include <random>

#include "sfarg/hecke.hpp"

using namespace sfarg;

namespace {

EigenBasis weighted(u64 q, u64 P_max = 200)
{
    auto B = diagonalize(build_space(q), std::max<u64>(P_max, sym2_required_terms(q)));
    attach_weights(B);
    return B;
}

} // namespace

TEST(Basis, Level11MatchesCurve11a)
{
    auto B = weighted(11);
    ASSERT_EQ(B.forms.size(), 1u);
    const auto& f = B.forms[0];
    // 11a: a_2 = −2, a_3 = −1, a_5 = 1, a_7 = −2, a_11 = 1
    EXPECT_NEAR(f.lambda_p(2), -std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(f.lambda_p(3), -1 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(f.lambda_p(5), 1 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(f.lambda_p(7), -2 / std::sqrt(7.0), 1e-12);
    EXPECT_NEAR(f.lambda_p(11), 1 / std::sqrt(11.0), 1e-12);
    EXPECT_NEAR(lambda_n(f, 4), 1.0, 1e-12);
    EXPECT_NEAR(lambda_n(f, 6), 0.816496580927726, 1e-12);
    EXPECT_NEAR(lambda_n(f, 121), 1.0 / 11, 1e-12);
    EXPECT_EQ(f.epsilon, 1);
}

TEST(Basis, Level37Signs)
{
    auto B = diagonalize(build_space(37), 100);
    ASSERT_EQ(B.forms.size(), 2u);
    // 37a has rank 1 (odd functional equation), 37b rank 0
    EXPECT_NEAR(B.forms[0].lambda_p(2), -std::sqrt(2.0), 1e-12);
    EXPECT_EQ(B.forms[0].epsilon, -1);
    EXPECT_NEAR(B.forms[1].lambda_p(2), 0.0, 1e-12);
    EXPECT_EQ(B.forms[1].epsilon, 1);
    for (const auto& f : B.forms) EXPECT_NEAR(std::sqrt(37.0) * f.lambda_p(37), f.epsilon, 1e-12);
}

TEST(Basis, DeligneAndHeckeRelations)
{
    for (u64 q : {37, 101}) {
        auto B = diagonalize(build_space(q), 1000);
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<u64> pick(1, 30);
        for (const auto& f : B.forms) {
            auto lam = lambda_table(f, 1000);
            for (u64 n = 1; n <= 1000; ++n) EXPECT_LE(std::fabs(lam[n]), divisor_tau(n) + 1e-8) << q << " " << n;
            for (int k = 0; k < 200; ++k) {
                u64 m = pick(rng), n = pick(rng), g = std::gcd(m, n);
                double rhs = 0;
                for (u64 d = 1; d <= g; ++d)
                    if (g % d == 0 && d % q != 0) rhs += lam[m * n / (d * d)];
                EXPECT_NEAR(lam[m] * lam[n], rhs, 1e-10);
            }
        }
    }
}

TEST(Basis, IndependentOfSplitPrimeOrder)
{
    auto S = build_space(101);
    auto A = diagonalize(S, 100);
    DiagonalizeOptions opt;
    opt.split_primes = {19, 3, 13, 2, 7, 5, 17, 11};
    opt.seed = 99;
    auto B = diagonalize(S, 100, opt);
    ASSERT_EQ(A.forms.size(), B.forms.size());
    for (std::size_t i = 0; i < A.forms.size(); ++i) {
        EXPECT_EQ(A.forms[i].epsilon, B.forms[i].epsilon);
        for (std::size_t k = 0; k < A.forms[i].lambda.size(); ++k)
            EXPECT_NEAR(A.forms[i].lambda[k], B.forms[i].lambda[k], 1e-12);
    }
}

TEST(Basis, EmptyLevel)
{
    auto B = diagonalize(build_space(13), 100);
    EXPECT_EQ(B.dim, 0);
    EXPECT_TRUE(B.forms.empty());
    EXPECT_THROW(diagonalize(build_space(11), 50), InputError);
}

TEST(Sym2, Level11Value)
{
    auto B = weighted(11);
    EXPECT_NEAR(B.forms[0].sym2_l1, 1.05759924459096, 1e-10);
    EXPECT_NEAR(B.forms[0].omega, 2 * pi * pi / (11 * 1.05759924459096), 1e-10);
    // the Euler product creeps towards the same value
    auto e = sym2_l1_euler(B.forms[0], B.forms[0].p_max());
    EXPECT_NEAR(e.value, B.forms[0].sym2_l1, 0.05);
}

TEST(Sym2, PositiveAcrossFamily)
{
    auto B = weighted(101);
    double total = 0;
    for (const auto& f : B.forms) {
        EXPECT_GT(f.sym2_l1, 0);
        EXPECT_GT(f.omega, 0);
        total += f.omega;
    }
    // Σω_f = 1 + O(q^{-3/2}) by Petersson with m = n = 1
    EXPECT_NEAR(total, 1.0, 0.02);
    EXPECT_NEAR(harmonic_weight(B.forms[0], B.dim, WeightFormula::asymptotic),
                (pi * pi / 6) / (B.dim * B.forms[0].sym2_l1), 1e-15);
}

TEST(Cache, JsonRoundTripIsExact)
{
    auto B = weighted(37);
    auto dir = std::filesystem::temp_directory_path() / "sfarg_hecke_cache";
    std::filesystem::remove_all(dir);
    save_basis(B, dir);
    auto L = load_basis(dir, 37, B.P_max);
    ASSERT_TRUE(L.has_value());
    ASSERT_EQ(L->forms.size(), B.forms.size());
    for (std::size_t i = 0; i < B.forms.size(); ++i) {
        EXPECT_EQ(L->forms[i].lambda, B.forms[i].lambda);
        EXPECT_EQ(L->forms[i].primes, B.forms[i].primes);
        EXPECT_EQ(L->forms[i].omega, B.forms[i].omega);
        EXPECT_EQ(L->forms[i].epsilon, B.forms[i].epsilon);
    }
    EXPECT_EQ(basis_to_json(*L).dump(), basis_to_json(B).dump());
    EXPECT_FALSE(load_basis(dir, 37, B.P_max + 1000).has_value());
    EXPECT_FALSE(load_basis(dir, 11).has_value());
    std::filesystem::remove_all(dir);
}
