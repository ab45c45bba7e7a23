#include "tempstar/evaluation.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <thread>

namespace tempstar {

namespace {

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ValidationError("shape mismatch: " + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
    }
}

// Replication means of the loss columns: row b holds the resampled means of every model.
Eigen::MatrixXd bootstrap_means(const Eigen::MatrixXd& loss, const McsOptions& opt) {
    const auto n = static_cast<std::size_t>(loss.rows());
    const Eigen::Index m = loss.cols();
    Eigen::MatrixXd means(static_cast<Eigen::Index>(opt.replications), m);

    auto run = [&](std::size_t begin, std::size_t end) {
        Eigen::RowVectorXd acc(m);
        for (std::size_t b = begin; b < end; ++b) {
            const auto idx = block_bootstrap_indices(n, opt.block, opt.seed, b);
            acc.setZero();
            for (std::size_t t : idx) {
                acc += loss.row(static_cast<Eigen::Index>(t));
            }
            means.row(static_cast<Eigen::Index>(b)) = acc / static_cast<double>(n);
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, opt.replications));
    if (workers == 1) {
        run(0, opt.replications);
        return means;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (opt.replications + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(opt.replications, begin + chunk);
        if (begin < end) {
            pool.emplace_back(run, begin, end);
        }
    }
    for (auto& t : pool) {
        t.join();
    }
    return means;
}

double signed_infinity(double v) {
    if (v > 0.0) return std::numeric_limits<double>::infinity();
    if (v < 0.0) return -std::numeric_limits<double>::infinity();
    return 0.0;
}

}  // namespace

double frobenius_norm(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted) {
    check_same_shape(observed, predicted);
    return (observed - predicted).squaredNorm();
}

double LossSeries::total() const {
    return std::accumulate(losses.begin(), losses.end(), 0.0);
}

LossSeries loss_series(std::string model, const Eigen::MatrixXd& observed,
                       const Eigen::MatrixXd& predicted, LossGranularity granularity) {
    check_same_shape(observed, predicted);
    const Eigen::MatrixXd sq = (observed - predicted).array().square().matrix();
    LossSeries s{std::move(model), {}};
    if (granularity == LossGranularity::Period) {
        s.losses.reserve(static_cast<std::size_t>(sq.cols()));
        for (Eigen::Index t = 0; t < sq.cols(); ++t) {
            s.losses.push_back(sq.col(t).sum());
        }
    } else {
        s.losses.reserve(static_cast<std::size_t>(sq.size()));
        for (Eigen::Index t = 0; t < sq.cols(); ++t) {
            for (Eigen::Index i = 0; i < sq.rows(); ++i) {
                s.losses.push_back(sq(i, t));
            }
        }
    }
    return s;
}

std::vector<EvaluationResult> in_sample_evaluation(const TemperaturePanel& panel,
                                                   const std::vector<ModelSpec>& specs,
                                                   LossGranularity granularity) {
    std::vector<EvaluationResult> out;
    const Eigen::MatrixXd observed = panel.values().rightCols(panel.values().cols() - 2);
    for (const auto& spec : specs) {
        const auto model = fit_star(panel, spec.weights);
        const auto fitted = fitted_levels(model, panel);
        auto losses = loss_series(spec.name, observed, fitted.levels, granularity);
        out.push_back({spec.name, frobenius_norm(observed, fitted.levels), std::move(losses)});
    }
    return out;
}

std::vector<EvaluationResult> oos_experiment(const TemperaturePanel& panel,
                                             const std::vector<ModelSpec>& specs, int origin_year,
                                             int horizon, LossGranularity granularity) {
    if (horizon < 1) {
        throw ValidationError("horizon must be at least 1, got " + std::to_string(horizon));
    }
    if (origin_year + horizon > panel.last_year()) {
        throw ValidationError("origin " + std::to_string(origin_year) + " plus horizon " +
                              std::to_string(horizon) + " runs past the last year " +
                              std::to_string(panel.last_year()));
    }
    if (origin_year - panel.first_year() + 1 < 4) {
        throw ValidationError("origin year leaves fewer than 4 training years");
    }
    const auto train = panel.slice_years(panel.first_year(), origin_year);
    const Eigen::MatrixXd observed = panel.slice_years(origin_year + 1, origin_year + horizon).values();

    std::vector<EvaluationResult> out;
    for (const auto& spec : specs) {
        const auto model = fit_star(train, spec.weights);
        const auto fc = forecast(model, train, horizon);
        auto losses = loss_series(spec.name, observed, fc.levels, granularity);
        out.push_back({spec.name, frobenius_norm(observed, fc.levels), std::move(losses)});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.fn < b.fn; });
    return out;
}

// ---------------------------------------------------------------------------
// Model confidence set

std::string_view mcs_statistic_name(McsStatistic s) {
    return s == McsStatistic::SemiQuadratic ? "SQ" : "R";
}

std::optional<McsStatistic> parse_mcs_statistic(std::string_view text) {
    const std::string t = csv::lower(csv::trim(text));
    if (t == "sq" || t == "semi-quadratic" || t == "semiquadratic") return McsStatistic::SemiQuadratic;
    if (t == "r" || t == "range") return McsStatistic::Range;
    return std::nullopt;
}

std::vector<std::size_t> block_bootstrap_indices(std::size_t n, std::size_t block, std::uint64_t seed,
                                                 std::size_t replication) {
    if (n == 0 || block == 0 || block > n) {
        throw ValidationError("block length must lie in [1, n]");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replication),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(replication) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> start(0, n - block);
    std::vector<std::size_t> idx;
    idx.reserve(n);
    while (idx.size() < n) {
        const std::size_t s = start(rng);
        for (std::size_t k = 0; k < block && idx.size() < n; ++k) {
            idx.push_back(s + k);
        }
    }
    return idx;
}

std::optional<double> McsReport::p_value_of(const std::string& model) const {
    for (const auto& s : elimination) {
        if (s.model == model) {
            return s.p_value;
        }
    }
    return std::nullopt;
}

McsReport mcs(const std::vector<LossSeries>& losses, const McsOptions& opt) {
    if (losses.empty()) {
        throw ValidationError("MCS needs at least one model");
    }
    if (opt.replications < 100) {
        throw ValidationError("MCS needs at least 100 bootstrap replications");
    }
    if (!(opt.alpha >= 0.0 && opt.alpha < 1.0)) {
        throw ValidationError("MCS alpha must lie in [0, 1)");
    }
    const std::size_t n = losses.front().losses.size();
    std::set<std::string> names;
    for (const auto& l : losses) {
        if (l.losses.size() != n) {
            throw ValidationError("MCS loss series have different lengths");
        }
        if (!names.insert(l.model).second) {
            throw ValidationError("duplicate model name in MCS input: " + l.model);
        }
    }
    if (n < 2) {
        throw ValidationError("MCS needs at least 2 periods");
    }
    if (opt.block < 1 || opt.block > n) {
        throw ValidationError("MCS block length must lie in [1, " + std::to_string(n) + "]");
    }

    McsReport report;
    report.statistic = opt.statistic;
    report.replications = opt.replications;
    report.block = opt.block;
    report.seed = opt.seed;
    report.alpha = opt.alpha;

    const auto m = static_cast<Eigen::Index>(losses.size());
    Eigen::MatrixXd loss(static_cast<Eigen::Index>(n), m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < n; ++t) {
            const double v = losses[static_cast<std::size_t>(j)].losses[t];
            if (!std::isfinite(v)) {
                throw NumericalError("non-finite loss for " + losses[static_cast<std::size_t>(j)].model);
            }
            loss(static_cast<Eigen::Index>(t), j) = v;
        }
    }
    // Sequential sums: identical columns must give bit-identical means.
    Eigen::RowVectorXd mean(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double sum = 0.0;
        for (Eigen::Index t = 0; t < loss.rows(); ++t) sum += loss(t, j);
        mean(j) = sum / static_cast<double>(n);
    }
    const Eigen::MatrixXd boot = bootstrap_means(loss, opt);
    const auto B = static_cast<double>(opt.replications);

    std::vector<Eigen::Index> alive(static_cast<std::size_t>(m));
    std::iota(alive.begin(), alive.end(), Eigen::Index{0});
    std::set<std::pair<Eigen::Index, Eigen::Index>> warned;
    double running_p = 0.0;

    while (alive.size() > 1) {
        const std::size_t k = alive.size();
        // Pairwise statistic and its recentred bootstrap distribution.
        double stat = 0.0;
        Eigen::VectorXd boot_stat = Eigen::VectorXd::Zero(boot.rows());
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) {
                const Eigen::Index i = alive[a];
                const Eigen::Index j = alive[b];
                const double d = mean(i) - mean(j);
                const Eigen::VectorXd centred = (boot.col(i) - boot.col(j)).array() - d;
                const double var = centred.squaredNorm() / B;
                if (!(var > 0.0)) {
                    if (warned.insert({i, j}).second) {
                        report.warnings.push_back("zero bootstrap variance for pair " +
                                                  losses[static_cast<std::size_t>(i)].model + "/" +
                                                  losses[static_cast<std::size_t>(j)].model +
                                                  "; pair ignored in the statistic");
                    }
                    continue;
                }
                if (opt.statistic == McsStatistic::SemiQuadratic) {
                    stat += d * d / var;
                    boot_stat += (centred.array().square() / var).matrix();
                } else {
                    const double sd = std::sqrt(var);
                    stat = std::max(stat, std::abs(d) / sd);
                    boot_stat = boot_stat.cwiseMax((centred.array().abs() / sd).matrix());
                }
            }
        }
        const double step_p =
            static_cast<double>((boot_stat.array() >= stat).count()) / B;

        // Model with the largest standardized relative loss.
        std::size_t worst = 0;
        double worst_t = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < k; ++a) {
            const Eigen::Index i = alive[a];
            double t_i = 0.0;
            if (opt.statistic == McsStatistic::SemiQuadratic) {
                double others = 0.0;
                Eigen::VectorXd boot_others = Eigen::VectorXd::Zero(boot.rows());
                for (Eigen::Index j : alive) {
                    others += mean(j);
                    boot_others += boot.col(j);
                }
                const double d = mean(i) - others / static_cast<double>(k);
                const Eigen::VectorXd centred =
                    (boot.col(i) - boot_others / static_cast<double>(k)).array() - d;
                const double var = centred.squaredNorm() / B;
                t_i = var > 0.0 ? d / std::sqrt(var) : signed_infinity(d);
            } else {
                t_i = -std::numeric_limits<double>::infinity();
                for (Eigen::Index j : alive) {
                    if (j == i) continue;
                    const double d = mean(i) - mean(j);
                    const Eigen::VectorXd centred = (boot.col(i) - boot.col(j)).array() - d;
                    const double var = centred.squaredNorm() / B;
                    t_i = std::max(t_i, var > 0.0 ? d / std::sqrt(var) : signed_infinity(d));
                }
            }
            if (t_i > worst_t) {
                worst_t = t_i;
                worst = a;
            }
        }

        running_p = std::max(running_p, step_p);
        report.elimination.push_back(
            {losses[static_cast<std::size_t>(alive[worst])].model, running_p, step_p, stat});
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    report.elimination.push_back({losses[static_cast<std::size_t>(alive.front())].model, 1.0, 1.0, 0.0});

    for (const auto& s : report.elimination) {
        if (s.p_value >= opt.alpha) {
            report.surviving.push_back(s.model);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Reports

void write_mcs_json(std::ostream& out, const McsReport& report) {
    nlohmann::json j;
    j["statistic"] = std::string(mcs_statistic_name(report.statistic));
    j["replications"] = report.replications;
    j["block"] = report.block;
    j["seed"] = report.seed;
    j["alpha"] = report.alpha;
    auto steps = nlohmann::json::array();
    for (const auto& s : report.elimination) {
        steps.push_back({{"model", s.model}, {"p_value", s.p_value}, {"step_p", s.step_p},
                         {"statistic", s.statistic}});
    }
    j["elimination"] = std::move(steps);
    j["surviving"] = report.surviving;
    j["warnings"] = report.warnings;
    out << j.dump(2) << '\n';
}

void write_report_csv(std::ostream& out, const EvaluationReport& report) {
    out << "panel,row,model,value\n";
    for (const auto& r : report.in_sample) {
        csv::write_row(out, {"in-sample", "FN", r.model, csv::format_double(r.fn)});
    }
    for (const auto& s : report.mcs.elimination) {
        auto it = std::find_if(report.out_of_sample.begin(), report.out_of_sample.end(),
                               [&](const auto& r) { return r.model == s.model; });
        if (it != report.out_of_sample.end()) {
            csv::write_row(out, {"out-of-sample", "FN", s.model, csv::format_double(it->fn)});
        }
    }
    for (const auto& s : report.mcs.elimination) {
        csv::write_row(out, {"out-of-sample", "pv", s.model, csv::format_double(s.p_value)});
    }
}

void write_report_json(std::ostream& out, const EvaluationReport& report) {
    nlohmann::json j;
    auto in = nlohmann::json::array();
    for (const auto& r : report.in_sample) {
        in.push_back({{"model", r.model}, {"fn", r.fn}});
    }
    auto oos = nlohmann::json::array();
    for (const auto& s : report.mcs.elimination) {
        auto it = std::find_if(report.out_of_sample.begin(), report.out_of_sample.end(),
                               [&](const auto& r) { return r.model == s.model; });
        oos.push_back({{"model", s.model},
                       {"fn", it != report.out_of_sample.end() ? it->fn : 0.0},
                       {"p_value", s.p_value}});
    }
    j["in_sample"] = std::move(in);
    j["out_of_sample"] = std::move(oos);
    j["origin_year"] = report.origin_year;
    j["horizon"] = report.horizon;
    j["mcs"] = {{"statistic", std::string(mcs_statistic_name(report.mcs.statistic))},
                {"replications", report.mcs.replications},
                {"block", report.mcs.block},
                {"seed", report.mcs.seed},
                {"alpha", report.mcs.alpha},
                {"surviving", report.mcs.surviving},
                {"warnings", report.mcs.warnings}};
    out << j.dump(2) << '\n';
}

}  // namespace tempstar
