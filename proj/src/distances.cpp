#include "tempstar/distances.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>

namespace tempstar {

namespace {

void check_ids(std::size_t n, const std::vector<std::string>& ids) {
    if (ids.size() != n) {
        throw ValidationError("distance input has " + std::to_string(n) + " items but " +
                              std::to_string(ids.size()) + " labels");
    }
}

std::vector<std::uint64_t> pack(const SignString& s) {
    std::vector<std::uint64_t> words((s.size() + 63) / 64, 0);
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.bits[k]) {
            words[k / 64] |= std::uint64_t{1} << (k % 64);
        }
    }
    return words;
}

}  // namespace

std::string_view metric_name(Metric metric) {
    switch (metric) {
        case Metric::Slope: return "slope";
        case Metric::Diff: return "diff";
        case Metric::Hamming: return "hamming";
    }
    return "?";
}

void DistanceMatrix::validate() const {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (values.rows() != n || values.cols() != n) {
        throw ValidationError("distance matrix shape does not match its labels");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i, i) != 0.0) {
            throw ValidationError("distance matrix has a nonzero diagonal at " + labels[i]);
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = values(i, j);
            if (!std::isfinite(d)) {
                throw NumericalError("non-finite distance between " + labels[i] + " and " + labels[j]);
            }
            if (d < 0.0 || d != values(j, i)) {
                throw ValidationError("distance matrix is negative or asymmetric at " + labels[i] +
                                      "/" + labels[j]);
            }
        }
    }
}

DistanceMatrix slope_distance(const std::vector<TrendFit>& trends, const std::vector<std::string>& ids) {
    check_ids(trends.size(), ids);
    const auto n = static_cast<Eigen::Index>(trends.size());
    DistanceMatrix d{Metric::Slope, ids, Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::abs(trends[i].slope - trends[j].slope);
            d.values(i, j) = v;
            d.values(j, i) = v;
        }
    }
    return d;
}

DistanceMatrix diff_distance(const std::vector<DiffSeries>& diffs, const std::vector<std::string>& ids) {
    check_ids(diffs.size(), ids);
    const auto n = static_cast<Eigen::Index>(diffs.size());
    DistanceMatrix d{Metric::Diff, ids, Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& a = diffs[i].values;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto& b = diffs[j].values;
            if (a.size() != b.size()) {
                throw ValidationError("difference series length mismatch: " + ids[i] + "/" + ids[j]);
            }
            double ss = 0.0;
            for (std::size_t t = 0; t < a.size(); ++t) {
                const double g = a[t] - b[t];
                ss += g * g;
            }
            const double v = std::sqrt(ss);
            d.values(i, j) = v;
            d.values(j, i) = v;
        }
    }
    return d;
}

DistanceMatrix diff_distance(const TemperaturePanel& panel) {
    if (panel.num_years() < 2) {
        throw ValidationError("difference distance needs at least 2 years");
    }
    return diff_distance(panel_differences(panel), panel.ids());
}

DistanceMatrix hamming_distance(const std::vector<SignString>& signs, const std::vector<std::string>& ids) {
    check_ids(signs.size(), ids);
    const auto n = static_cast<Eigen::Index>(signs.size());
    std::vector<std::vector<std::uint64_t>> packed;
    packed.reserve(signs.size());
    for (const auto& s : signs) {
        if (s.size() != signs.front().size()) {
            throw ValidationError("sign strings have different lengths");
        }
        packed.push_back(pack(s));
    }
    DistanceMatrix d{Metric::Hamming, ids, Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            int count = 0;
            for (std::size_t w = 0; w < packed[i].size(); ++w) {
                count += std::popcount(packed[i][w] ^ packed[j][w]);
            }
            d.values(i, j) = count;
            d.values(j, i) = count;
        }
    }
    return d;
}

DistanceMatrix subset(const DistanceMatrix& dist, const std::vector<std::string>& keep) {
    std::map<std::string, Eigen::Index> pos;
    for (std::size_t i = 0; i < dist.labels.size(); ++i) {
        pos[dist.labels[i]] = static_cast<Eigen::Index>(i);
    }
    std::vector<Eigen::Index> idx;
    for (const auto& id : keep) {
        auto it = pos.find(id);
        if (it == pos.end()) {
            throw ValidationError("label not in distance matrix: " + id);
        }
        idx.push_back(it->second);
    }
    const auto n = static_cast<Eigen::Index>(keep.size());
    DistanceMatrix out{dist.metric, keep, Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out.values(i, j) = dist.values(idx[i], idx[j]);
        }
    }
    return out;
}

void write_distance_csv(std::ostream& out, const DistanceMatrix& dist) {
    std::vector<std::string> header{""};
    header.insert(header.end(), dist.labels.begin(), dist.labels.end());
    csv::write_row(out, header);
    for (std::size_t i = 0; i < dist.labels.size(); ++i) {
        std::vector<std::string> row{dist.labels[i]};
        for (std::size_t j = 0; j < dist.labels.size(); ++j) {
            row.push_back(csv::format_double(
                dist.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
        csv::write_row(out, row);
    }
}

}  // namespace tempstar
