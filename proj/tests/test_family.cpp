#include <gtest/gtest.h>

#include <map>
#include <random>

#include "sfarg/family.hpp"

using namespace sfarg;

namespace {

const EigenBasis& basis(u64 q)
{
    static std::map<u64, EigenBasis> cache;
    auto it = cache.find(q);
    if (it == cache.end()) {
        auto B = diagonalize(build_space(q), std::max<u64>(1000, sym2_required_terms(q)));
        attach_weights(B);
        it = cache.emplace(q, std::move(B)).first;
    }
    return it->second;
}

double direct_rhs(u64 q, u64 m, u64 n, u64 c_max)
{
    double y = 4 * pi * std::sqrt(double(m * n)), acc = 0;
    for (u64 c = q; c <= c_max; c += q) acc += kloosterman_sum(m, n, c) / double(c) * bessel_j1(y / double(c));
    return (m == n) - 2 * pi * acc;
}

} // namespace

TEST(Petersson, BatchedKloostermanMatchesDirectSums)
{
    std::vector<std::pair<u64, u64>> pairs;
    for (u64 m = 1; m <= 12; ++m)
        for (u64 n = m; m * n <= 24; ++n) pairs.push_back({m, n});
    for (u64 q : {2, 3, 11, 37}) {
        u64 c_max = 1500;
        auto reps = petersson_rhs(q, pairs, c_max);
        for (const auto& r : reps) EXPECT_NEAR(r.rhs_truncated, direct_rhs(q, r.m, r.n, c_max), 1e-12) << q;
    }
}

TEST(Petersson, SpectralSideWithinTail)
{
    const auto& B = basis(37);
    for (auto [m, n] : std::vector<std::pair<u64, u64>>{{1, 1}, {1, 2}, {2, 3}, {4, 4}, {6, 5}}) {
        auto r = petersson_check(B, m, n, 37 * 20000);
        EXPECT_LE(std::fabs(r.lhs - r.rhs_truncated), r.tail_bound + 1e-6) << m << "," << n;
        EXPECT_LT(r.tail_bound, petersson_rhs(37, m, n, 37 * 2000).tail_bound);
        EXPECT_EQ(r.kronecker, m == n);
    }
}

TEST(Petersson, ReportFields)
{
    auto r = petersson_rhs(101, 2, 3, 101 * 100);
    EXPECT_TRUE(r.lemma_precondition);
    EXPECT_NEAR(r.error_scale, std::pow(101.0, -1.5) * std::sqrt(6.0) / std::sqrt(2.0), 1e-15);
    EXPECT_FALSE(petersson_rhs(11, 3, 3, 1100).lemma_precondition);
    EXPECT_THROW(petersson_rhs(15, 1, 1, 1500), InputError);
    EXPECT_THROW(petersson_rhs(11, 1, 1, 10), InputError);
}

TEST(Moments, ConstantsAndPrediction)
{
    EXPECT_NEAR(moment_constant(2), 1 / (2 * pi * pi), 1e-15);
    EXPECT_NEAR(moment_constant(4), 3 / std::pow(2 * pi * pi, 2), 1e-15);
    EXPECT_EQ(moment_constant(3), 0.0);
    EXPECT_EQ(predicted_moment(3, 101), 0.0);
    EXPECT_NEAR(predicted_moment(2, 101), std::log(std::log(101.0)) / (2 * pi * pi), 1e-15);
    EXPECT_THROW(predicted_moment(2, 11), InputError);
}

TEST(Moments, HarmonicMoment)
{
    const auto& B = basis(37);
    std::vector<double> v{2.0, -1.0};
    EXPECT_NEAR(harmonic_moment(B, v, 3), B.forms[0].omega * 8 - B.forms[1].omega, 1e-15);
    EXPECT_THROW(harmonic_moment(B, {1.0}, 1), InputError);
}

TEST(Moments, OracleEqualsHarmonicMoment)
{
    const auto& B = basis(101);
    for (double delta : {0.2, 0.6}) {
        double x = selberg_x(101, delta);
        std::vector<double> M;
        for (const auto& f : B.forms) M.push_back(m_value(f, 1.0, x));
        for (int n = 1; n <= 4; ++n) {
            auto o = model_moment_oracle(B, n, 1.0, delta);
            EXPECT_NEAR(o.value, harmonic_moment(B, M, n), 1e-12) << delta << " " << n;
        }
    }
}

TEST(Moments, DiagonalSecondMoment)
{
    const auto& B = basis(101);
    for (double t : {0.5, 1.0, 3.0}) {
        auto o = model_moment_oracle(B, 2, t, 0.6);
        EXPECT_NEAR(o.diagonal, m_second_moment_diagonal(101, t, 0.6), 1e-15);
        EXPECT_GT(o.off_diag_budget, 0);
    }
    // x³ = 101^{0.6} ≈ 15.9: primes 2..13
    double manual = 0;
    for (u64 p : {2, 3, 5, 7, 11, 13}) manual += std::pow(std::sin(std::log(double(p))), 2) / double(p);
    EXPECT_NEAR(m_second_moment_diagonal(101, 1.0, 0.6), manual / (pi * pi), 1e-15);
    EXPECT_THROW(model_moment_oracle(B, 9, 1.0, 0.2), InputError);
    EXPECT_THROW(model_moment_oracle(B, 2, 1.0, 1.0), InputError);
}

TEST(Distribution, WeightedCdfAndMoments)
{
    const auto& B = basis(101);
    std::vector<double> S;
    for (std::size_t i = 0; i < B.forms.size(); ++i) S.push_back(0.1 * (double(i % 3) - 1));
    auto D = distribution_mu_q(B, 1.0, S);
    double scale = std::sqrt(std::log(std::log(101.0)));
    double tw = 0, m1 = 0;
    for (std::size_t i = 0; i < S.size(); ++i) {
        tw += B.forms[i].omega;
        m1 += B.forms[i].omega * S[i] / scale;
    }
    EXPECT_NEAR(D.total_weight, tw, 1e-14);
    EXPECT_NEAR(D.mean(), m1 / tw, 1e-14);
    for (std::size_t i = 1; i < D.samples.size(); ++i) {
        EXPECT_LE(D.samples[i - 1].xi, D.samples[i].xi);
        if (D.samples[i - 1].xi == D.samples[i].xi) {
            EXPECT_LT(D.samples[i - 1].form_id, D.samples[i].form_id);
        }
    }
    EXPECT_GT(D.ks_distance, 0);
    EXPECT_LE(D.ks_distance, 1);
    EXPECT_EQ(D.moments.size(), 6u);
}

TEST(Distribution, GaussianSampleHasSmallKs)
{
    // synthetic family: equal weights at Gaussian quantiles
    EigenBasis B;
    B.q = 1009;
    const int n = 400;
    std::vector<double> S;
    double scale = std::sqrt(std::log(std::log(1009.0)));
    for (int i = 0; i < n; ++i) {
        HeckeEigenform f;
        f.id = i;
        f.omega = 1.0 / n;
        B.forms.push_back(f);
        double u = (i + 0.5) / n, lo = -2, hi = 2;
        for (int k = 0; k < 80; ++k) (gaussian_cdf(0.5 * (lo + hi)) < u ? lo : hi) = 0.5 * (lo + hi);
        S.push_back(0.5 * (lo + hi) * scale);
    }
    auto D = distribution_mu_q(B, 1.0, S);
    EXPECT_NEAR(D.ks_distance, 0.5 / n, 1e-9);
    EXPECT_NEAR(D.variance(), gaussian_variance, 0.02 * gaussian_variance);
}

TEST(Distribution, Preconditions)
{
    const auto& B = basis(101);
    std::vector<double> S(B.forms.size(), 0.1);
    S[2] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(distribution_mu_q(B, 1.0, S), InputError);
    EXPECT_THROW(distribution_mu_q(basis(11), 1.0, {0.1}), InputError);
}
