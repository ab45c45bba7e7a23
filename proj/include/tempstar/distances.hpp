#pragma once

#include "tempstar/panel_io.hpp"
#include "tempstar/series_features.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tempstar {

enum class Metric { Slope, Diff, Hamming };

std::string_view metric_name(Metric metric);

/// Symmetric dissimilarities over a labelled set of countries. The label set may be a
/// subset of the panel (slope distances over significant trends only).
struct DistanceMatrix {
    Metric metric = Metric::Slope;
    std::vector<std::string> labels;
    Eigen::MatrixXd values;

    std::size_t size() const { return labels.size(); }
    // Zero diagonal, exact symmetry, nonnegative and finite.
    void validate() const;
};

// |b_i - b_j| over the given fits; `ids[k]` labels `trends[k]`.
DistanceMatrix slope_distance(const std::vector<TrendFit>& trends, const std::vector<std::string>& ids);

// Euclidean distance between first-difference vectors.
DistanceMatrix diff_distance(const TemperaturePanel& panel);
DistanceMatrix diff_distance(const std::vector<DiffSeries>& diffs, const std::vector<std::string>& ids);

// Number of differing sign bits; integer valued.
DistanceMatrix hamming_distance(const std::vector<SignString>& signs, const std::vector<std::string>& ids);

// Restriction to `keep` (in the order given). Throws for unknown labels.
DistanceMatrix subset(const DistanceMatrix& dist, const std::vector<std::string>& keep);

// Square matrix with id header row and column.
void write_distance_csv(std::ostream& out, const DistanceMatrix& dist);

}  // namespace tempstar
