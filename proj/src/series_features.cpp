#include "tempstar/series_features.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace tempstar {

double student_t_two_sided_p(double t, double dof) {
    if (!(dof > 0.0)) {
        throw ValidationError("Student t needs positive degrees of freedom");
    }
    if (std::isnan(t)) {
        throw NumericalError("Student t statistic is NaN");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    // P(|T| >= |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)
    const double x = dof / (dof + t * t);
    return std::clamp(boost::math::ibeta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

double student_t_cdf(double t, double dof) {
    const double tail = 0.5 * student_t_two_sided_p(t, dof);
    return t >= 0.0 ? 1.0 - tail : tail;
}

TrendFit fit_linear_trend(std::span<const double> series, double alpha) {
    const std::size_t n = series.size();
    if (n < 3) {
        throw ValidationError("linear trend needs at least 3 observations, got " + std::to_string(n));
    }
    const double nd = static_cast<double>(n);
    const double t_mean = (nd + 1.0) / 2.0;
    double y_mean = 0.0;
    for (double y : series) {
        y_mean += y;
    }
    y_mean /= nd;

    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dt = static_cast<double>(k + 1) - t_mean;
        sxx += dt * dt;
        sxy += dt * (series[k] - y_mean);
    }

    TrendFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = y_mean - fit.slope * t_mean;

    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = series[k] - fit.intercept - fit.slope * static_cast<double>(k + 1);
        sse += r * r;
    }
    const double dof = nd - 2.0;
    fit.residual_variance = sse / dof;
    fit.slope_se = std::sqrt(fit.residual_variance / sxx);

    if (fit.slope_se > 0.0) {
        fit.t_stat = fit.slope / fit.slope_se;
        fit.p_value = student_t_two_sided_p(fit.t_stat, dof);
    } else if (fit.slope != 0.0) {
        // exact line
        fit.t_stat = std::copysign(std::numeric_limits<double>::infinity(), fit.slope);
        fit.p_value = 0.0;
    } else {
        fit.t_stat = 0.0;
        fit.p_value = 1.0;
    }
    fit.significant = slope_significance(fit, alpha);
    return fit;
}

bool slope_significance(const TrendFit& fit, double alpha) {
    return fit.p_value < alpha;
}

DiffSeries first_differences(std::span<const double> series) {
    if (series.size() < 2) {
        throw ValidationError("first differences need at least 2 observations");
    }
    DiffSeries d;
    d.values.resize(series.size() - 1);
    for (std::size_t t = 0; t + 1 < series.size(); ++t) {
        d.values[t] = series[t + 1] - series[t];
    }
    return d;
}

SignString sign_sequence(const DiffSeries& diffs) {
    SignString s;
    s.bits.reserve(diffs.values.size());
    for (double v : diffs.values) {
        s.bits.push_back(v > 0.0 ? 1 : 0);
    }
    return s;
}

std::vector<TrendFit> fit_trends(const TemperaturePanel& panel, double alpha) {
    std::vector<TrendFit> out;
    out.reserve(panel.num_countries());
    for (std::size_t i = 0; i < panel.num_countries(); ++i) {
        out.push_back(fit_linear_trend(panel.series(i), alpha));
    }
    return out;
}

std::vector<DiffSeries> panel_differences(const TemperaturePanel& panel) {
    std::vector<DiffSeries> out;
    out.reserve(panel.num_countries());
    for (std::size_t i = 0; i < panel.num_countries(); ++i) {
        out.push_back(first_differences(panel.series(i)));
    }
    return out;
}

std::vector<SignString> panel_signs(const TemperaturePanel& panel) {
    std::vector<SignString> out;
    for (const auto& d : panel_differences(panel)) {
        out.push_back(sign_sequence(d));
    }
    return out;
}

void write_trend_csv(std::ostream& out, const TemperaturePanel& panel,
                     const std::vector<TrendFit>& fits) {
    if (fits.size() != panel.num_countries()) {
        throw ValidationError("trend table size does not match panel");
    }
    out << "country,intercept,slope,se,t,p,significant\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& f = fits[i];
        csv::write_row(out, {panel.country(i).id, csv::format_double(f.intercept),
                             csv::format_double(f.slope), csv::format_double(f.slope_se),
                             csv::format_double(f.t_stat), csv::format_double(f.p_value),
                             f.significant ? "true" : "false"});
    }
}

}  // namespace tempstar
