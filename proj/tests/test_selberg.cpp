#include <gtest/gtest.h>

#include <map>
#include <random>

#include "sfarg/selberg.hpp"

using namespace sfarg;

namespace {

const EigenBasis& basis(u64 q)
{
    static std::map<u64, EigenBasis> cache;
    auto it = cache.find(q);
    if (it == cache.end()) {
        u64 need = LFunction::required_terms(q, default_t_max + LFunction::margin);
        it = cache.emplace(q, diagonalize(build_space(q), std::max<u64>(need, 20000))).first;
    }
    return it->second;
}

} // namespace

TEST(LambdaX, BranchesAgreeAtJoins)
{
    for (double x : {4.0, 7.5, 31.0, 1000.0}) {
        for (double n : {x, x * x}) {
            double below = lambda_x_weight(std::nextafter(n, 0.0), x);
            double above = lambda_x_weight(std::nextafter(n, 1e300), x);
            EXPECT_NEAR(below, above, 1e-12) << x << " " << n;
        }
        EXPECT_NEAR(lambda_x_weight(x, x), 1.0, 1e-12);
        EXPECT_NEAR(lambda_x_weight(x * x, x), 0.5, 1e-12);
        EXPECT_EQ(lambda_x_weight(x * x * x, x), 0.0);
    }
}

TEST(LambdaX, RandomProperties)
{
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> ux(4, 60);
    for (int k = 0; k < 1000; ++k) {
        double x = ux(rng);
        double X3 = x * x * x;
        u64 n = std::uniform_int_distribution<u64>(1, u64(2 * X3))(rng);
        double v = lambda_x(n, x), L = von_mangoldt(n);
        if (double(n) <= x) EXPECT_EQ(v, L);
        else if (double(n) >= X3) EXPECT_EQ(v, 0.0);
        else {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, L + 1e-15);
        }
    }
    EXPECT_THROW(lambda_x(10, 3.9), InputError);
}

TEST(LambdaX, TableListsPrimePowersBelowXCubed)
{
    auto T = selberg_table(5.0);
    u64 count = 0;
    for (u64 n = 2; n < 125; ++n) count += prime_power_base(n) != 0;
    EXPECT_EQ(T.n.size(), count);
    for (std::size_t i = 0; i < T.n.size(); ++i) EXPECT_NEAR(T.value[i], lambda_x(T.n[i], 5.0), 1e-15);
    EXPECT_TRUE(std::is_sorted(T.n.begin(), T.n.end()));
    EXPECT_THROW(selberg_table(2000), InputError);
}

TEST(Satake, RootsOfLocalFactor)
{
    const auto& f = basis(37).forms[1];
    for (u64 p : {2, 3, 5, 7, 101, 997}) {
        auto s = satake(f, p);
        EXPECT_NEAR((s.alpha + s.beta).real(), f.lambda_p(p), 1e-12);
        EXPECT_NEAR(std::abs(s.alpha * s.beta - 1.0), 0, 1e-12);
        EXPECT_NEAR(std::abs(s.alpha), 1, 1e-12);
    }
    auto sq = satake(f, 37);
    EXPECT_NEAR(sq.alpha.real(), f.lambda_p(37), 1e-15);
    EXPECT_EQ(sq.beta, cplx(0, 0));
    EXPECT_THROW(satake(f, 4), InputError);
}

TEST(Satake, DeligneViolationReported)
{
    auto f = basis(11).forms[0];
    f.lambda[1] = 2.5; // p = 3
    EXPECT_THROW(satake(f, 3), NumericalError);
}

TEST(CoefficientsC, PowerSums)
{
    const auto& f = basis(11).forms[0];
    for (u64 p : {2, 3, 5, 13}) {
        auto s = satake(f, p);
        for (int m = 1; m <= 5; ++m) {
            u64 pm = 1;
            for (int k = 0; k < m; ++k) pm *= p;
            EXPECT_NEAR(c_f(f, pm), (std::pow(s.alpha, m) + std::pow(s.beta, m)).real(), 1e-12);
        }
        EXPECT_NEAR(c_f(f, p), f.lambda_p(p), 1e-15);
    }
    EXPECT_NEAR(c_f(f, 121), 1.0 / 11, 1e-15);
    EXPECT_EQ(c_f(f, 6), 0.0);
    EXPECT_EQ(c_f(f, 1), 0.0);
}

TEST(Polynomials, LogDerivativeSeriesMatchesL)
{
    const auto& f = basis(11).forms[0];
    LFunction L(f);
    cplx s(3.0, 4.0);
    double h = 1e-4;
    cplx d = (l_value(L, s + h) - l_value(L, s - h)) / (2 * h);
    cplx series = log_derivative_series(f, s, 5000);
    EXPECT_LT(std::abs(-d / l_value(L, s) - series), 1e-6);
}

TEST(Polynomials, WeightedPolyByHand)
{
    const auto& f = basis(11).forms[0];
    double x = 4;
    cplx s(0.9, 2.0), manual = 0, manual_log = 0;
    for (u64 n = 2; n < 64; ++n) {
        double w = lambda_x(n, x);
        if (w == 0) continue;
        cplx term = c_f(f, n) * w * std::exp(-s * std::log(double(n)));
        manual += term;
        manual_log += term / std::log(double(n));
    }
    EXPECT_LT(std::abs(weighted_poly(f, s, x, false) - manual), 1e-12);
    EXPECT_LT(std::abs(weighted_poly(f, s, x, true) - manual_log), 1e-12);
}

TEST(MValue, PrimeSumAndRemainder)
{
    const auto& f = basis(101).forms[2];
    double x = std::pow(101.0, 0.6 / 3); // x³ = 101^0.6 ≈ 15.9
    double t = 1.7, manual = 0;
    for (u64 p : {2, 3, 5, 7, 11, 13}) manual += f.lambda_p(p) * std::sin(t * std::log(double(p))) / std::sqrt(double(p));
    EXPECT_NEAR(m_value(f, t, x), -manual / pi, 1e-14);
    EXPECT_NEAR(m_value(f, -t, x), -m_value(f, t, x), 1e-15);
    LFunction L(f);
    EXPECT_NEAR(r_value(L, t, x), s_of_t(L, t).s_value - m_value(f, t, x), 1e-14);
}

TEST(Approximation, TermsReportedWithSigmaStatus)
{
    const auto& f = basis(11).forms[0];
    LFunction L(f);
    auto a = approx_s(L, 2.0, 10.0);
    EXPECT_EQ(a.sigma_status, SigmaStatus::certified_trivial);
    EXPECT_NEAR(a.sigma_x, 0.5 + 10 / std::log(10.0), 1e-15);
    EXPECT_NEAR(a.log_term, (a.sigma_x - 0.5) * std::log(13.0), 1e-12);
    cplx s(a.sigma_x, 2.0);
    EXPECT_NEAR(a.main, weighted_poly(f, s, 10.0, true).imag() / pi, 1e-15);
    EXPECT_GE(a.poly_term, 0);
}
