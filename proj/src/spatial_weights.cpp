#include "tempstar/spatial_weights.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <ostream>

namespace tempstar {

namespace {

struct Unnormalised {
    Eigen::MatrixXd values;
    std::string scaling;
};

// (N - d_ij) / N placed into panel coordinates, zero where no distance is defined.
Unnormalised raw_distance_weights(const DistanceMatrix& dist, const TemperaturePanel& panel,
                                  const DistanceScaling& scaling) {
    dist.validate();
    const auto n_panel = static_cast<Eigen::Index>(panel.num_countries());
    const double big_n = static_cast<double>(panel.num_countries());

    std::vector<Eigen::Index> pos(dist.size());
    for (std::size_t k = 0; k < dist.size(); ++k) {
        const auto idx = panel.index_of(dist.labels[k]);
        if (!idx) {
            throw ValidationError("distance label not in panel: " + dist.labels[k]);
        }
        pos[k] = static_cast<Eigen::Index>(*idx);
    }

    double factor = 1.0;
    std::string scaling_note = "raw";
    if (scaling.rescale) {
        if (!(scaling.rho > 0.0 && scaling.rho <= 1.0)) {
            throw ValidationError("rescale rho must lie in (0, 1]");
        }
        const double max_d = dist.values.size() > 0 ? dist.values.maxCoeff() : 0.0;
        if (max_d > 0.0) {
            factor = big_n * scaling.rho / max_d;
        }
        scaling_note = "rescaled rho=" + csv::format_double(scaling.rho);
    }

    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n_panel, n_panel);
    const auto k = static_cast<Eigen::Index>(dist.size());
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            if (a == b) {
                continue;
            }
            const double d = dist.values(a, b) * factor;
            if (d > big_n) {
                throw ValidationError("distance " + csv::format_double(d) + " between " +
                                      dist.labels[a] + " and " + dist.labels[b] +
                                      " exceeds N=" + std::to_string(panel.num_countries()) +
                                      "; enable distance rescaling");
            }
            raw(pos[a], pos[b]) = (big_n - d) / big_n;
        }
    }
    return {std::move(raw), scaling_note};
}

}  // namespace

std::string_view weight_kind_name(WeightKind kind) {
    switch (kind) {
        case WeightKind::NN: return "NN";
        case WeightKind::cA: return "cA";
        case WeightKind::cB: return "cB";
        case WeightKind::cC: return "cC";
        case WeightKind::dA: return "dA";
        case WeightKind::dB: return "dB";
        case WeightKind::dC: return "dC";
    }
    return "?";
}

std::optional<WeightKind> parse_weight_kind(std::string_view text) {
    std::string t = csv::trim(text);
    if (t.rfind("STAR_", 0) == 0) {
        t = t.substr(5);
    }
    for (WeightKind k : kAllWeightKinds) {
        if (csv::lower(weight_kind_name(k)) == csv::lower(t)) {
            return k;
        }
    }
    return std::nullopt;
}

std::vector<bool> WeightMatrix::zero_rows() const {
    std::vector<bool> out(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = (values.row(i).array() == 0.0).all();
    }
    return out;
}

std::size_t WeightMatrix::num_zero_rows() const {
    std::size_t n = 0;
    for (bool z : zero_rows()) {
        n += z ? 1 : 0;
    }
    return n;
}

void WeightMatrix::validate(double tol) const {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (values.rows() != n || values.cols() != n) {
        throw ValidationError("weight matrix shape does not match its labels");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i, i) != 0.0) {
            throw ValidationError("weight matrix has a nonzero diagonal at " + labels[i]);
        }
        if ((values.row(i).array() < 0.0).any() || !values.row(i).allFinite()) {
            throw ValidationError("weight matrix has negative or non-finite entries in row " + labels[i]);
        }
        const double s = values.row(i).sum();
        const bool zero = (values.row(i).array() == 0.0).all();
        if (!zero && std::abs(s - 1.0) > tol) {
            throw ValidationError("weight row " + labels[i] + " sums to " + csv::format_double(s));
        }
    }
}

Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& raw) {
    Eigen::MatrixXd out = raw;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double s = out.row(i).sum();
        if (s > 0.0) {
            out.row(i) /= s;
        }
    }
    return out;
}

WeightMatrix contiguity_weights(const AdjacencyList& adj, const TemperaturePanel& panel) {
    const auto n = static_cast<Eigen::Index>(panel.num_countries());
    WeightMatrix w{WeightKind::NN, panel.ids(), Eigen::MatrixXd::Zero(n, n), "contiguity", "", "raw"};
    for (std::size_t i = 0; i < panel.num_countries(); ++i) {
        const auto& id = panel.country(i).id;
        auto it = adj.all().find(id);
        if (it == adj.all().end() || it->second.empty()) {
            continue;
        }
        const double share = 1.0 / static_cast<double>(it->second.size());
        for (const auto& nb : it->second) {
            const auto j = panel.index_of(nb);
            if (!j) {
                throw ValidationError("adjacency references unknown country id: " + nb);
            }
            w.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*j)) = share;
        }
    }
    return w;
}

WeightMatrix distance_weights(const DistanceMatrix& dist, const TemperaturePanel& panel,
                              const DistanceScaling& scaling) {
    auto raw = raw_distance_weights(dist, panel, scaling);
    WeightKind kind = WeightKind::dA;
    if (dist.metric == Metric::Diff) kind = WeightKind::dB;
    if (dist.metric == Metric::Hamming) kind = WeightKind::dC;
    return {kind, panel.ids(), row_normalize(raw.values), std::string(metric_name(dist.metric)), "",
            raw.scaling};
}

WeightMatrix cluster_restricted_weights(const DistanceMatrix& dist, const ClusterAssignment& assign,
                                        const TemperaturePanel& panel,
                                        const DistanceScaling& scaling) {
    auto raw = raw_distance_weights(dist, panel, scaling);
    const auto ids = panel.ids();
    const auto groups = assign.members();
    const auto n = static_cast<Eigen::Index>(ids.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto li = assign.label_of(ids[static_cast<std::size_t>(i)]);
        const bool clustered_i =
            li && groups[static_cast<std::size_t>(*li - 1)].size() >= 2;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto lj = assign.label_of(ids[static_cast<std::size_t>(j)]);
            if (!clustered_i || !lj || *li != *lj) {
                raw.values(i, j) = 0.0;
            }
        }
    }
    WeightKind kind = WeightKind::cA;
    if (dist.metric == Metric::Diff) kind = WeightKind::cB;
    if (dist.metric == Metric::Hamming) kind = WeightKind::cC;
    return {kind, ids, row_normalize(raw.values), std::string(metric_name(dist.metric)), assign.cut,
            raw.scaling};
}

void write_weights_csv(std::ostream& out, const WeightMatrix& w) {
    std::vector<std::string> header{""};
    header.insert(header.end(), w.labels.begin(), w.labels.end());
    csv::write_row(out, header);
    for (std::size_t i = 0; i < w.labels.size(); ++i) {
        std::vector<std::string> row{w.labels[i]};
        for (std::size_t j = 0; j < w.labels.size(); ++j) {
            row.push_back(csv::format_double(
                w.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
        csv::write_row(out, row);
    }
}

void write_weights_meta_json(std::ostream& out, const WeightMatrix& w) {
    nlohmann::json j;
    j["kind"] = std::string(weight_kind_name(w.kind));
    j["source"] = w.source;
    j["cut"] = w.cut;
    j["scaling"] = w.scaling;
    j["zero_rows"] = w.num_zero_rows();
    std::vector<std::string> zero_ids;
    const auto zr = w.zero_rows();
    for (std::size_t i = 0; i < zr.size(); ++i) {
        if (zr[i]) {
            zero_ids.push_back(w.labels[i]);
        }
    }
    j["zero_row_ids"] = zero_ids;
    out << j.dump(2) << '\n';
}

}  // namespace tempstar
