#include "tempstar/star.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"

#include <cmath>
#include <ostream>

namespace tempstar {

namespace {

constexpr double kRankThreshold = 1e-10;

struct OlsResult {
    Eigen::VectorXd beta;
    double sse = 0.0;
    bool full_rank = true;
};

OlsResult ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(kRankThreshold);
    OlsResult r;
    if (qr.rank() < design.cols()) {
        r.full_rank = false;
        return r;
    }
    r.beta = qr.solve(response);
    r.sse = (response - design * r.beta).squaredNorm();
    return r;
}

void check_alignment(const StarModel& model, const TemperaturePanel& panel) {
    if (model.countries != panel.ids()) {
        throw ValidationError("model countries do not match the panel");
    }
}

}  // namespace

std::vector<std::string> StarModel::nonstationary() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < equations.size(); ++i) {
        const auto& e = equations[i];
        if (std::abs(e.phi) + std::abs(e.psi.value_or(0.0)) >= 1.0) {
            out.push_back(countries[i]);
        }
    }
    return out;
}

Eigen::MatrixXd difference_matrix(const Eigen::MatrixXd& levels) {
    if (levels.cols() < 2) {
        throw ValidationError("differencing needs at least 2 years");
    }
    return levels.rightCols(levels.cols() - 1) - levels.leftCols(levels.cols() - 1);
}

StarModel fit_star(const TemperaturePanel& panel, const WeightMatrix& weights) {
    if (panel.num_years() < 4) {
        throw ValidationError("STAR estimation needs at least 4 years");
    }
    if (weights.labels != panel.ids()) {
        throw ValidationError("weight matrix labels do not match the panel order");
    }
    weights.validate(1e-9);

    const Eigen::MatrixXd x = difference_matrix(panel.values());
    const Eigen::MatrixXd spatial = weights.values * x;
    const Eigen::Index rows = x.cols() - 1;
    const auto zero_rows = weights.zero_rows();

    StarModel model;
    model.countries = panel.ids();
    model.weights = weights;
    model.first_year = panel.first_year();
    model.last_year = panel.last_year();
    model.equations.reserve(panel.num_countries());

    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::VectorXd response = x.row(i).tail(rows).transpose();
        const Eigen::VectorXd own_lag = x.row(i).head(rows).transpose();
        const Eigen::VectorXd spatial_lag = spatial.row(i).head(rows).transpose();

        bool with_phi = true;
        bool with_psi = !zero_rows[static_cast<std::size_t>(i)];
        StarEquation eq;
        eq.n_obs = static_cast<std::size_t>(rows);
        while (true) {
            const Eigen::Index p = 1 + (with_phi ? 1 : 0) + (with_psi ? 1 : 0);
            Eigen::MatrixXd design(rows, p);
            design.col(0).setOnes();
            Eigen::Index col = 1;
            if (with_phi) design.col(col++) = own_lag;
            if (with_psi) design.col(col++) = spatial_lag;

            const auto fit = ols(design, response);
            if (fit.full_rank) {
                eq.c = fit.beta(0);
                col = 1;
                eq.has_phi = with_phi;
                eq.phi = with_phi ? fit.beta(col++) : 0.0;
                if (with_psi) eq.psi = fit.beta(col++);
                const Eigen::Index dof = rows - p;
                eq.sigma2 = dof > 0 ? fit.sse / static_cast<double>(dof) : 0.0;
                break;
            }
            if (with_psi) {
                with_psi = false;
                eq.note = "spatial lag collinear; dropped";
            } else if (with_phi) {
                with_phi = false;
                eq.note += eq.note.empty() ? "" : "; ";
                eq.note += "own lag collinear; dropped";
            } else {
                throw NumericalError("STAR equation for " + model.countries[static_cast<std::size_t>(i)] +
                                     " has no estimable regressors");
            }
        }
        model.equations.push_back(std::move(eq));
    }
    return model;
}

FittedPanel fitted_levels(const StarModel& model, const TemperaturePanel& panel) {
    check_alignment(model, panel);
    if (panel.first_year() != model.first_year || panel.last_year() != model.last_year) {
        throw ValidationError("fitted levels need the estimation panel");
    }
    const Eigen::MatrixXd& y = panel.values();
    const Eigen::MatrixXd x = difference_matrix(y);
    const Eigen::MatrixXd spatial = model.weights.values * x;
    const Eigen::Index cols = x.cols() - 1;

    FittedPanel out;
    out.countries = model.countries;
    out.first_year = panel.first_year() + 2;
    out.levels.resize(y.rows(), cols);
    out.diffs.resize(y.rows(), cols);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const auto& eq = model.equations[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < cols; ++k) {
            // predicted difference for level column k + 2
            const double xhat = eq.predict(x(i, k), spatial(i, k));
            out.diffs(i, k) = xhat;
            out.levels(i, k) = y(i, k + 1) + xhat;
        }
    }
    return out;
}

ForecastPanel forecast(const StarModel& model, const TemperaturePanel& panel, int horizon) {
    check_alignment(model, panel);
    if (horizon < 1) {
        throw ValidationError("forecast horizon must be at least 1, got " + std::to_string(horizon));
    }
    if (panel.num_years() < 2) {
        throw ValidationError("forecasting needs at least 2 observed years");
    }
    const Eigen::MatrixXd& y = panel.values();
    const auto n = y.rows();
    Eigen::VectorXd prev = y.col(y.cols() - 1) - y.col(y.cols() - 2);
    Eigen::VectorXd level = y.col(y.cols() - 1);

    ForecastPanel out;
    out.countries = model.countries;
    out.first_year = panel.last_year() + 1;
    out.levels.resize(n, horizon);
    out.diffs.resize(n, horizon);
    Eigen::VectorXd next(n);
    for (int h = 0; h < horizon; ++h) {
        const Eigen::VectorXd spatial = model.weights.values * prev;
        for (Eigen::Index i = 0; i < n; ++i) {
            next(i) = model.equations[static_cast<std::size_t>(i)].predict(prev(i), spatial(i));
        }
        level += next;
        out.diffs.col(h) = next;
        out.levels.col(h) = level;
        prev = next;
    }
    return out;
}

void write_coefficients_csv(std::ostream& out, const StarModel& model) {
    out << "country,c,phi,psi,sigma2\n";
    for (std::size_t i = 0; i < model.equations.size(); ++i) {
        const auto& e = model.equations[i];
        csv::write_row(out, {model.countries[i], csv::format_double(e.c),
                             e.has_phi ? csv::format_double(e.phi) : "",
                             e.psi ? csv::format_double(*e.psi) : "", csv::format_double(e.sigma2)});
    }
}

void write_levels_csv(std::ostream& out, const FittedPanel& levels) {
    out << "country,year,value\n";
    for (Eigen::Index i = 0; i < levels.levels.rows(); ++i) {
        for (Eigen::Index k = 0; k < levels.levels.cols(); ++k) {
            csv::write_row(out, {levels.countries[static_cast<std::size_t>(i)],
                                 std::to_string(levels.first_year + static_cast<int>(k)),
                                 csv::format_double(levels.levels(i, k))});
        }
    }
}

}  // namespace tempstar
