#pragma once

#include "tempstar/panel_io.hpp"
#include "tempstar/spatial_weights.hpp"
#include "tempstar/star.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tempstar {

// trace[(Y - Yhat)'(Y - Yhat)], the total squared error.
double frobenius_norm(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted);

enum class LossGranularity {
    Period,       // one loss per year, summed over countries
    Observation,  // one loss per country-year cell, year-major
};

struct LossSeries {
    std::string model;
    std::vector<double> losses;

    double total() const;
};

LossSeries loss_series(std::string model, const Eigen::MatrixXd& observed,
                       const Eigen::MatrixXd& predicted,
                       LossGranularity granularity = LossGranularity::Period);

struct ModelSpec {
    std::string name;
    WeightMatrix weights;
};

struct EvaluationResult {
    std::string model;
    double fn = 0.0;
    LossSeries losses;
};

// Fit on the whole panel and score the one-step fitted levels (years 3..T).
std::vector<EvaluationResult> in_sample_evaluation(const TemperaturePanel& panel,
                                                   const std::vector<ModelSpec>& specs,
                                                   LossGranularity granularity = LossGranularity::Period);

/// Fit every model on years up to `origin_year`, forecast `horizon` years and score the
/// forecasts against the held-out observations. Results are sorted by increasing loss.
std::vector<EvaluationResult> oos_experiment(const TemperaturePanel& panel,
                                             const std::vector<ModelSpec>& specs, int origin_year,
                                             int horizon,
                                             LossGranularity granularity = LossGranularity::Period);

enum class McsStatistic { SemiQuadratic, Range };

std::string_view mcs_statistic_name(McsStatistic s);
std::optional<McsStatistic> parse_mcs_statistic(std::string_view text);

struct McsOptions {
    double alpha = 0.01;
    std::size_t replications = 10000;
    std::size_t block = 2;  // moving-block length; 1 is the iid bootstrap
    McsStatistic statistic = McsStatistic::SemiQuadratic;
    std::uint64_t seed = 20240101;
    std::size_t workers = 1;
};

struct McsStep {
    std::string model;
    double p_value = 1.0;    // max-adjusted MCS p-value
    double step_p = 1.0;     // equivalence-test p-value when this model was removed
    double statistic = 0.0;  // test statistic on the set it was removed from
};

struct McsReport {
    std::vector<McsStep> elimination;  // last entry is the final survivor, p = 1
    std::vector<std::string> surviving;
    McsStatistic statistic = McsStatistic::SemiQuadratic;
    std::size_t replications = 0;
    std::size_t block = 0;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::vector<std::string> warnings;

    std::optional<double> p_value_of(const std::string& model) const;
};

/// Model Confidence Set over equal-length loss series.
///
/// Each round studentizes the pairwise mean loss differentials with bootstrap variances,
/// compares the chosen statistic with its recentred bootstrap distribution and removes the
/// model with the largest standardized relative loss. The same resampled index sets are used
/// in every round. Pairs whose bootstrap variance is zero contribute nothing to the statistic.
McsReport mcs(const std::vector<LossSeries>& losses, const McsOptions& options);

// Moving-block resample of 0..n-1 for replication `replication`; deterministic in the seed.
std::vector<std::size_t> block_bootstrap_indices(std::size_t n, std::size_t block, std::uint64_t seed,
                                                 std::size_t replication);

struct EvaluationReport {
    std::vector<EvaluationResult> in_sample;      // model order as supplied
    std::vector<EvaluationResult> out_of_sample;  // elimination order
    McsReport mcs;
    int origin_year = 0;
    int horizon = 0;
};

void write_mcs_json(std::ostream& out, const McsReport& report);
void write_report_csv(std::ostream& out, const EvaluationReport& report);
void write_report_json(std::ostream& out, const EvaluationReport& report);

}  // namespace tempstar
