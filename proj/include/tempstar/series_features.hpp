#pragma once

#include "tempstar/panel_io.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tempstar {

// OLS fit of y_t = intercept + slope * t with t = 1..T.
struct TrendFit {
    double intercept = 0.0;
    double slope = 0.0;       // degrees C per year
    double slope_se = 0.0;    // classical homoskedastic standard error
    double t_stat = 0.0;
    double p_value = 1.0;     // two-sided, Student t with T-2 degrees of freedom
    bool significant = false; // p_value < alpha used at fit time
    double residual_variance = 0.0;
    std::size_t n = 0;
};

struct DiffSeries {
    std::vector<double> values;  // values[t] = y[t+1] - y[t]
};

// One bit per annual change; 1 for a strict increase, 0 for a decrease or no change.
struct SignString {
    std::vector<std::uint8_t> bits;
    std::size_t size() const { return bits.size(); }
};

// Two-sided tail probability P(|T| >= |t|) for Student t with `dof` degrees of freedom,
// via the regularized incomplete beta function.
double student_t_two_sided_p(double t, double dof);
double student_t_cdf(double t, double dof);

TrendFit fit_linear_trend(std::span<const double> series, double alpha = 0.05);
bool slope_significance(const TrendFit& fit, double alpha);

DiffSeries first_differences(std::span<const double> series);
SignString sign_sequence(const DiffSeries& diffs);

// Per-country helpers over a whole panel, in panel row order.
std::vector<TrendFit> fit_trends(const TemperaturePanel& panel, double alpha = 0.05);
std::vector<DiffSeries> panel_differences(const TemperaturePanel& panel);
std::vector<SignString> panel_signs(const TemperaturePanel& panel);

// `country,intercept,slope,se,t,p,significant`
void write_trend_csv(std::ostream& out, const TemperaturePanel& panel,
                     const std::vector<TrendFit>& fits);

}  // namespace tempstar
