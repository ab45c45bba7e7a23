#include "tempstar/errors.hpp"
#include "tempstar/series_features.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tempstar;

namespace {

double t_density(double x, double nu) {
    const double logc = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * std::numbers::pi);
    return std::exp(logc - (nu + 1) / 2 * std::log1p(x * x / nu));
}

// Composite Simpson on [0, |t|].
double two_sided_by_quadrature(double t, double nu) {
    const int m = 20000;
    const double b = std::abs(t);
    const double h = b / m;
    double s = t_density(0, nu) + t_density(b, nu);
    for (int k = 1; k < m; ++k) {
        s += (k % 2 ? 4.0 : 2.0) * t_density(k * h, nu);
    }
    return 2.0 * (0.5 - s * h / 3.0);
}

std::vector<double> random_series(std::mt19937_64& rng, std::size_t T) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double a = 10 * u(rng), b = 0.05 * u(rng);
    std::vector<double> y(T);
    for (std::size_t k = 0; k < T; ++k) y[k] = a + b * static_cast<double>(k + 1) + n(rng);
    return y;
}

}  // namespace

TEST(Trend, NoiselessLine) {
    std::vector<double> y;
    for (int t = 1; t <= 20; ++t) y.push_back(10 + 0.5 * t);
    const auto fit = fit_linear_trend(y);
    EXPECT_NEAR(fit.slope, 0.5, 1e-12);
    EXPECT_NEAR(fit.intercept, 10.0, 1e-10);
    EXPECT_NEAR(fit.residual_variance, 0.0, 1e-20);
    EXPECT_TRUE(fit.significant);
    EXPECT_LT(fit.p_value, 1e-12);
}

TEST(Trend, MatchesNormalEquationsOracle) {
    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 200; ++rep) {
        const auto y = random_series(rng, 10 + static_cast<std::size_t>(rep % 120));
        const auto [a, b] = oracle::trend_normal_equations(y);
        const auto fit = fit_linear_trend(y);
        EXPECT_NEAR(fit.slope, b, 1e-10);
        EXPECT_NEAR(fit.intercept, a, 1e-10);
    }
}

TEST(Trend, ResidualsAreOrthogonalToRegressors) {
    std::mt19937_64 rng(102);
    for (int rep = 0; rep < 50; ++rep) {
        const auto y = random_series(rng, 122);
        const auto fit = fit_linear_trend(y);
        double sum = 0, dot = 0;
        const double tbar = 61.5;
        double tsd = 0;
        for (std::size_t k = 0; k < y.size(); ++k) tsd += (k + 1 - tbar) * (k + 1 - tbar);
        tsd = std::sqrt(tsd / y.size());
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double t = static_cast<double>(k + 1);
            const double e = y[k] - fit.intercept - fit.slope * t;
            sum += e;
            dot += e * (t - tbar) / tsd;
        }
        EXPECT_LT(std::abs(sum), 1e-8);
        EXPECT_LT(std::abs(dot), 1e-8);
    }
}

TEST(Trend, ShiftChangesOnlyTheIntercept) {
    std::mt19937_64 rng(103);
    auto y = random_series(rng, 60);
    const auto fit = fit_linear_trend(y);
    for (auto& v : y) v += 3.25;
    const auto shifted = fit_linear_trend(y);
    EXPECT_NEAR(shifted.slope, fit.slope, 1e-12);
    EXPECT_NEAR(shifted.intercept, fit.intercept + 3.25, 1e-10);
    EXPECT_NEAR(shifted.p_value, fit.p_value, 1e-9);
}

TEST(Trend, SlopeSignificanceIsPBelowAlpha) {
    TrendFit f;
    f.p_value = 0.05;
    EXPECT_FALSE(slope_significance(f, 0.05));
    f.p_value = 0.0499;
    EXPECT_TRUE(slope_significance(f, 0.05));
}

TEST(Trend, TooShortSeriesFails) {
    const std::vector<double> y{1.0, 2.0};
    EXPECT_THROW(fit_linear_trend(y), ValidationError);
}

TEST(StudentT, TwoSidedPMatchesQuadrature) {
    const std::vector<std::pair<double, double>> points = {
        {0.5, 3}, {1.0, 5}, {1.96, 120}, {2.0, 10}, {2.5, 30}, {-1.3, 8}, {3.2, 4}, {0.1, 1}, {4.0, 60}, {1.7, 2}};
    for (const auto& [t, nu] : points) {
        EXPECT_NEAR(student_t_two_sided_p(t, nu), two_sided_by_quadrature(t, nu), 1e-6) << t << " " << nu;
    }
}

TEST(StudentT, CdfIsSymmetric) {
    for (double t : {0.3, 1.1, 2.7}) {
        EXPECT_NEAR(student_t_cdf(t, 7) + student_t_cdf(-t, 7), 1.0, 1e-14);
    }
    EXPECT_DOUBLE_EQ(student_t_cdf(0.0, 7), 0.5);
}

TEST(StudentT, MonteCarloSizeOnWhiteNoise) {
    std::mt19937_64 rng(104);
    std::normal_distribution<double> n(0.0, 1.0);
    const int reps = 10000;
    int rejections = 0;
    std::vector<double> y(122);
    for (int r = 0; r < reps; ++r) {
        for (auto& v : y) v = n(rng);
        rejections += fit_linear_trend(y, 0.05).significant ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(rejections) / reps, 0.05, 0.01);
}

TEST(Differences, SmallExamples) {
    const std::vector<double> y{1, 3, 2};
    EXPECT_EQ(first_differences(y).values, (std::vector<double>{2, -1}));
    const std::vector<double> flat{4, 4, 4, 4};
    EXPECT_EQ(first_differences(flat).values, (std::vector<double>{0, 0, 0}));
    const std::vector<double> one{1};
    EXPECT_THROW(first_differences(one), ValidationError);
}

TEST(Differences, CumulativeSumInvertsExactlyOnDyadicData) {
    std::mt19937_64 rng(105);
    std::uniform_int_distribution<int> q(-4096, 4096);
    std::vector<double> y(122);
    for (auto& v : y) v = 15.0 + q(rng) / 1024.0;
    const auto d = first_differences(y);
    std::vector<double> back{y.front()};
    for (double v : d.values) back.push_back(back.back() + v);
    EXPECT_EQ(back, y);
}

TEST(Differences, CumulativeSumInvertsOnRealData) {
    const auto p = tempstar::testing::random_panel(5, 122, 106);
    for (std::size_t i = 0; i < p.num_countries(); ++i) {
        const auto y = p.series(i);
        const auto d = first_differences(y);
        double level = y.front();
        for (std::size_t k = 0; k < d.values.size(); ++k) {
            level += d.values[k];
            EXPECT_NEAR(level, y[k + 1], 1e-12);
        }
    }
}

TEST(Signs, ZeroChangeIsBitZero) {
    EXPECT_EQ(sign_sequence({{2, -1, 0.5}}).bits, (std::vector<std::uint8_t>{1, 0, 1}));
    EXPECT_EQ(sign_sequence({{-1, -2, -0.1}}).bits, (std::vector<std::uint8_t>{0, 0, 0}));
    EXPECT_EQ(sign_sequence({{0.0}}).bits, (std::vector<std::uint8_t>{0}));
}

TEST(PanelFeatures, RowsFollowPanelOrder) {
    const auto p = tempstar::testing::random_panel(4, 30, 107);
    const auto fits = fit_trends(p);
    const auto diffs = panel_differences(p);
    const auto signs = panel_signs(p);
    ASSERT_EQ(fits.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto s = p.series(i);
        EXPECT_EQ(fits[i].slope, fit_linear_trend(s).slope);
        EXPECT_EQ(diffs[i].values, first_differences(s).values);
        EXPECT_EQ(signs[i].bits, sign_sequence(diffs[i]).bits);
    }
}
