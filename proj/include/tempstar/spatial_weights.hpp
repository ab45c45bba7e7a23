#pragma once

#include "tempstar/clustering.hpp"
#include "tempstar/distances.hpp"
#include "tempstar/panel_io.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tempstar {

enum class WeightKind { NN, cA, cB, cC, dA, dB, dC };

inline constexpr std::array<WeightKind, 7> kAllWeightKinds = {
    WeightKind::NN, WeightKind::cA, WeightKind::cB, WeightKind::cC,
    WeightKind::dA, WeightKind::dB, WeightKind::dC,
};

std::string_view weight_kind_name(WeightKind kind);  // "NN", "cA", ...
std::optional<WeightKind> parse_weight_kind(std::string_view text);

// How raw distances enter (N - d) / N.
struct DistanceScaling {
    bool rescale = false;  // map the largest off-diagonal distance to N * rho
    double rho = 0.95;
};

/// Row-normalised spatial weights over the full panel order. Each row sums to one or is
/// identically zero (no spatial regressor for that unit).
struct WeightMatrix {
    WeightKind kind = WeightKind::NN;
    std::vector<std::string> labels;
    Eigen::MatrixXd values;
    std::string source;   // metric or "contiguity"
    std::string cut;      // cut rule for cluster-restricted kinds
    std::string scaling;  // "raw" or "rescaled rho=..."

    std::vector<bool> zero_rows() const;
    std::size_t num_zero_rows() const;
    // Zero diagonal, nonnegative, rows summing to 1 within `tol` or exactly zero.
    void validate(double tol = 1e-12) const;
};

WeightMatrix contiguity_weights(const AdjacencyList& adj, const TemperaturePanel& panel);

// Countries absent from `dist.labels` get zero rows and columns.
WeightMatrix distance_weights(const DistanceMatrix& dist, const TemperaturePanel& panel,
                              const DistanceScaling& scaling = {});

// Same-cluster pairs only; idiosyncratic, null and singleton units get zero rows.
WeightMatrix cluster_restricted_weights(const DistanceMatrix& dist, const ClusterAssignment& assign,
                                        const TemperaturePanel& panel,
                                        const DistanceScaling& scaling = {});

// Divides each row by its sum; zero rows stay zero.
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& raw);

void write_weights_csv(std::ostream& out, const WeightMatrix& w);
void write_weights_meta_json(std::ostream& out, const WeightMatrix& w);

}  // namespace tempstar
