#pragma once

#include "tempstar/clustering.hpp"
#include "tempstar/distances.hpp"
#include "tempstar/evaluation.hpp"
#include "tempstar/panel_io.hpp"
#include "tempstar/series_features.hpp"
#include "tempstar/spatial_weights.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tempstar {

enum class Scheme { A, B, C };

std::string_view scheme_name(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view text);

struct SchemeConfig {
    std::string cut = "clusters";  // clusters | partitions | height | auto
    std::size_t k = 1;
    double height = 0.0;
    std::size_t min_size = 2;

    CutRule rule() const;
};

/// Everything a run needs. Loaded from a JSON document; CLI flags override single keys.
struct RunConfig {
    std::filesystem::path panel;
    std::filesystem::path adjacency;  // optional
    std::filesystem::path countries;  // optional metadata: name, zone, area
    PanelFormat panel_format = PanelFormat::Auto;

    double trend_alpha = 0.05;
    std::map<Scheme, SchemeConfig> schemes = {
        {Scheme::A, {"clusters", 4, 0.0, 2}},
        {Scheme::B, {"clusters", 5, 0.0, 2}},
        {Scheme::C, {"clusters", 12, 0.0, 2}},
    };

    DistanceScaling scaling;
    bool da_include_null = true;   // dA uses every slope, insignificant ones included
    bool ca_exclude_null = true;   // clustering A runs on significant slopes only
    std::string oos_weights = "full";  // full | train: panel the weights are derived from

    int split_year = 2000;
    int horizon = 22;
    LossGranularity granularity = LossGranularity::Period;
    McsOptions mcs;
    std::size_t workers = 1;
    std::filesystem::path output_dir = "out";

    // Fails fast on bad values and unreadable inputs.
    void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});

struct SchemeResult {
    Scheme scheme = Scheme::A;
    DistanceMatrix distances;  // the matrix that was clustered
    Dendrogram dendrogram;
    ClusterAssignment assignment;
};

/// Shared intermediate products of the analysis for one panel.
class Analysis {
public:
    Analysis(TemperaturePanel panel, std::optional<AdjacencyList> adjacency, const RunConfig& config);

    const TemperaturePanel& panel() const { return panel_; }
    const std::vector<TrendFit>& trends() const { return trends_; }
    const std::optional<AdjacencyList>& adjacency() const { return adjacency_; }

    const DistanceMatrix& slope_all() const { return slope_all_; }
    const DistanceMatrix& slope_clustered() const { return slope_clustered_; }
    const DistanceMatrix& diff() const { return diff_; }
    const DistanceMatrix& hamming() const { return hamming_; }

    const SchemeResult& scheme(Scheme s) const;
    WeightMatrix weights(WeightKind kind) const;
    std::vector<ModelSpec> model_specs() const;
    std::vector<std::string> non_significant() const;

private:
    SchemeResult run_scheme(Scheme s) const;

    RunConfig config_;
    TemperaturePanel panel_;
    std::optional<AdjacencyList> adjacency_;
    std::vector<TrendFit> trends_;
    DistanceMatrix slope_all_;
    DistanceMatrix slope_clustered_;
    DistanceMatrix diff_;
    DistanceMatrix hamming_;
    std::map<Scheme, SchemeResult> schemes_;
};

struct LoadedInputs {
    TemperaturePanel panel;
    std::optional<AdjacencyList> adjacency;
};

LoadedInputs load_inputs(const RunConfig& config);

EvaluationReport evaluate(const TemperaturePanel& panel, const std::optional<AdjacencyList>& adjacency,
                          const RunConfig& config);

// Command bodies. Each writes its files under config.output_dir and a short summary to `log`.
void cmd_trends(const RunConfig& config, std::ostream& log);
void cmd_cluster(const RunConfig& config, Scheme scheme, std::ostream& log);
void cmd_weights(const RunConfig& config, WeightKind kind, std::ostream& log);
void cmd_fit(const RunConfig& config, WeightKind kind, std::ostream& log);
void cmd_forecast(const RunConfig& config, const std::vector<WeightKind>& kinds, int origin, int horizon,
                  std::ostream& log);
void cmd_evaluate(const RunConfig& config, std::ostream& log);
// Loss file `model,period,loss`; empty path runs the out-of-sample experiment first.
void cmd_mcs(const RunConfig& config, const std::filesystem::path& losses, std::ostream& log);

std::vector<LossSeries> load_losses(const std::filesystem::path& path);

}  // namespace tempstar
