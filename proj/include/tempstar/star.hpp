#pragma once

#include "tempstar/panel_io.hpp"
#include "tempstar/spatial_weights.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tempstar {

/// x_t = c + phi * x_{t-1} + psi * sum_j w_ij x_{j,t-1} + e_t for one country, where x is
/// the first difference of the temperature level.
struct StarEquation {
    double c = 0.0;
    double phi = 0.0;
    bool has_phi = true;
    std::optional<double> psi;  // absent for zero weight rows or a degenerate spatial lag
    double sigma2 = 0.0;        // SSE / (n - p)
    std::size_t n_obs = 0;
    std::string note;           // why a regressor was dropped, empty otherwise

    double predict(double own_lag, double spatial_lag) const {
        return c + (has_phi ? phi * own_lag : 0.0) + (psi ? *psi * spatial_lag : 0.0);
    }
};

struct StarModel {
    std::vector<std::string> countries;
    std::vector<StarEquation> equations;
    WeightMatrix weights;
    int first_year = 0;  // level panel span used for estimation
    int last_year = 0;

    // Countries whose |phi| + |psi| >= 1.
    std::vector<std::string> nonstationary() const;
};

// Levels for years first_year .. first_year + cols - 1.
struct FittedPanel {
    std::vector<std::string> countries;
    int first_year = 0;
    Eigen::MatrixXd levels;
    Eigen::MatrixXd diffs;  // predicted first differences, same alignment
};

using ForecastPanel = FittedPanel;

// N x (T-1) first differences of the level panel; column k belongs to year first_year+k+1.
Eigen::MatrixXd difference_matrix(const Eigen::MatrixXd& levels);

/// Equation-by-equation OLS over level years 3..T (T-2 rows per equation).
StarModel fit_star(const TemperaturePanel& panel, const WeightMatrix& weights);

// In-sample one-step fit: yhat_t = y_{t-1} + xhat_t for level years 3..T.
FittedPanel fitted_levels(const StarModel& model, const TemperaturePanel& panel);

// Iterated projection of the differences for `horizon` years past the last panel year,
// integrated from the last observed level.
ForecastPanel forecast(const StarModel& model, const TemperaturePanel& panel, int horizon);

// `country,c,phi,psi,sigma2`
void write_coefficients_csv(std::ostream& out, const StarModel& model);
// Long format `country,year,value`.
void write_levels_csv(std::ostream& out, const FittedPanel& levels);

}  // namespace tempstar
