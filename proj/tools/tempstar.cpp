// tempstar: clustering of country temperature series and STAR forecast comparison.

#include "tempstar/errors.hpp"
#include "tempstar/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

using namespace tempstar;

namespace {

struct Overrides {
    std::string config;
    std::string panel;
    std::string adjacency;
    std::string countries;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<std::size_t> replications;
    std::optional<std::size_t> block;
    std::string statistic;
    std::optional<int> split_year;
    std::optional<int> horizon;
    std::optional<std::size_t> workers;
    bool rescale = false;
};

RunConfig make_config(const Overrides& o) {
    std::string path = o.config;
    if (path.empty()) {
        if (const char* env = std::getenv("TEMPSTAR_CONFIG")) {
            path = env;
        }
    }
    RunConfig c = path.empty() ? RunConfig{} : load_config(path);
    if (!o.panel.empty()) c.panel = o.panel;
    if (!o.adjacency.empty()) c.adjacency = o.adjacency;
    if (!o.countries.empty()) c.countries = o.countries;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.seed) c.mcs.seed = *o.seed;
    if (o.alpha) c.mcs.alpha = *o.alpha;
    if (o.replications) c.mcs.replications = *o.replications;
    if (o.block) c.mcs.block = *o.block;
    if (!o.statistic.empty()) {
        const auto s = parse_mcs_statistic(o.statistic);
        if (!s) throw ValidationError("--statistic must be SQ or R");
        c.mcs.statistic = *s;
    }
    if (o.split_year) c.split_year = *o.split_year;
    if (o.horizon) c.horizon = *o.horizon;
    if (o.workers) {
        c.workers = *o.workers;
        c.mcs.workers = *o.workers;
    }
    if (o.rescale) c.scaling.rescale = true;
    c.validate();
    return c;
}

WeightKind to_kind(const std::string& text) {
    const auto k = parse_weight_kind(text);
    if (!k) throw ValidationError("unknown weight kind '" + text + "' (NN, cA, cB, cC, dA, dB, dC)");
    return *k;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temperature panel clustering and STAR model comparison"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config, "JSON run configuration (default: $TEMPSTAR_CONFIG)");
    app.add_option("--panel", o.panel, "Temperature panel CSV (long or wide)");
    app.add_option("--adjacency", o.adjacency, "Land-border list, columns country_a,country_b");
    app.add_option("--countries", o.countries, "Country metadata: country,name,zone,area");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--seed", o.seed, "Bootstrap seed");
    app.add_option("--alpha", o.alpha, "MCS significance level");
    app.add_option("--replications", o.replications, "Bootstrap replications");
    app.add_option("--block", o.block, "Bootstrap block length");
    app.add_option("--statistic", o.statistic, "MCS statistic: SQ or R");
    app.add_option("--split-year", o.split_year, "Last training year");
    app.add_option("--horizon", o.horizon, "Forecast horizon in years");
    app.add_option("--workers", o.workers, "Bootstrap worker threads");
    app.add_flag("--rescale", o.rescale, "Rescale distances so that the largest maps to rho * N");

    auto* trends = app.add_subcommand("trends", "Fit linear trends and test slope significance");
    std::string scheme_text;
    auto* cluster = app.add_subcommand("cluster", "Cluster the panel under scheme A, B or C");
    cluster->add_option("--scheme", scheme_text, "A (slopes), B (differences), C (signs)")->required();
    std::string kind_text;
    auto* weights = app.add_subcommand("weights", "Build a spatial weight matrix");
    weights->add_option("--kind", kind_text, "NN, cA, cB, cC, dA, dB, dC")->required();
    auto* fit = app.add_subcommand("fit", "Estimate a STAR(1,1) model on the full panel");
    fit->add_option("--kind", kind_text, "Weight matrix")->required();
    int origin = 0;
    int fc_horizon = 0;
    std::vector<std::string> fc_kinds;
    auto* fc = app.add_subcommand("forecast", "Fit up to an origin year and forecast");
    fc->add_option("--origin", origin, "Last observed year")->required();
    fc->add_option("--horizon", fc_horizon, "Forecast horizon (default: config horizon)");
    fc->add_option("--kind", fc_kinds, "Weight matrices (default: all)");
    auto* evaluate = app.add_subcommand("evaluate", "In-sample and out-of-sample comparison with MCS");
    std::string losses;
    auto* mcs_cmd = app.add_subcommand("mcs", "Model confidence set on a loss file or the OOS experiment");
    mcs_cmd->add_option("--losses", losses, "Loss CSV: model,period,loss");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig config = make_config(o);
        if (trends->parsed()) {
            cmd_trends(config, std::cout);
        } else if (cluster->parsed()) {
            const auto s = parse_scheme(scheme_text);
            if (!s) throw ValidationError("--scheme must be A, B or C");
            cmd_cluster(config, *s, std::cout);
        } else if (weights->parsed()) {
            cmd_weights(config, to_kind(kind_text), std::cout);
        } else if (fit->parsed()) {
            cmd_fit(config, to_kind(kind_text), std::cout);
        } else if (fc->parsed()) {
            std::vector<WeightKind> kinds;
            for (const auto& k : fc_kinds) kinds.push_back(to_kind(k));
            if (kinds.empty()) kinds.assign(kAllWeightKinds.begin(), kAllWeightKinds.end());
            cmd_forecast(config, kinds, origin, fc_horizon > 0 ? fc_horizon : config.horizon, std::cout);
        } else if (evaluate->parsed()) {
            cmd_evaluate(config, std::cout);
        } else if (mcs_cmd->parsed()) {
            cmd_mcs(config, losses, std::cout);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
