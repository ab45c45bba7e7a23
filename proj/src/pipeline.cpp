#include "tempstar/pipeline.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"
#include "tempstar/star.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace tempstar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
        throw ValidationError("config: '" + std::string(where) + "' must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ValidationError("config: unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
void read(const json& j, std::string_view key, T& target) {
    auto it = j.find(std::string(key));
    if (it == j.end()) {
        return;
    }
    try {
        target = it->get<T>();
    } catch (const json::exception& e) {
        throw ValidationError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) {
        return {};
    }
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::ofstream open_output(const RunConfig& config, const std::string& name) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) {
        throw ValidationError("cannot create output directory " + config.output_dir.string() + ": " +
                              ec.message());
    }
    const fs::path path = config.output_dir / name;
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    return out;
}

void write_zone_area(std::ostream& out, const ClusterAssignment& assign, const TemperaturePanel& panel) {
    const auto zones = categorize_zones(panel);
    std::map<std::string, double> zone_area;
    std::map<std::pair<std::string, std::string>, std::pair<int, double>> cell;
    for (const auto& c : panel.countries()) {
        const double area = c.area_km2.value_or(0.0);
        const std::string& zone = zones.of.at(c.id);
        zone_area[zone] += area;
        auto& v = cell[{zone, assign.category_of(c.id)}];
        v.first += 1;
        v.second += area;
    }
    out << "zone,category,countries,area_km2,area_share\n";
    const auto cats = categorize(assign).categories;
    for (const auto& zone : zones.categories) {
        for (const auto& cat : cats) {
            auto it = cell.find({zone, cat});
            const int count = it == cell.end() ? 0 : it->second.first;
            const double area = it == cell.end() ? 0.0 : it->second.second;
            const double total = zone_area[zone];
            csv::write_row(out, {zone, cat, std::to_string(count), csv::format_double(area),
                                 csv::format_double(total > 0.0 ? area / total : 0.0)});
        }
    }
}

void write_loss_csv(std::ostream& out, const std::vector<EvaluationResult>& results) {
    out << "model,period,loss\n";
    for (const auto& r : results) {
        for (std::size_t t = 0; t < r.losses.losses.size(); ++t) {
            csv::write_row(out, {r.model, std::to_string(t + 1), csv::format_double(r.losses.losses[t])});
        }
    }
}

std::string model_name(WeightKind kind) {
    return "STAR_" + std::string(weight_kind_name(kind));
}

}  // namespace

std::string_view scheme_name(Scheme s) {
    switch (s) {
        case Scheme::A: return "A";
        case Scheme::B: return "B";
        case Scheme::C: return "C";
    }
    return "?";
}

std::optional<Scheme> parse_scheme(std::string_view text) {
    const std::string t = csv::lower(csv::trim(text));
    if (t == "a") return Scheme::A;
    if (t == "b") return Scheme::B;
    if (t == "c") return Scheme::C;
    return std::nullopt;
}

CutRule SchemeConfig::rule() const {
    CutRule r;
    if (cut == "clusters") {
        r = CutRule::clusters(k);
    } else if (cut == "partitions") {
        r = CutRule::partitions(k);
    } else if (cut == "height") {
        r = CutRule::at_height(height);
    } else if (cut == "auto") {
        r = CutRule::auto_gap();
    } else {
        throw ValidationError("unknown cut rule '" + cut + "' (clusters|partitions|height|auto)");
    }
    r.min_size = min_size;
    return r;
}

// ---------------------------------------------------------------------------
// Config

void RunConfig::validate() const {
    if (panel.empty()) {
        throw ValidationError("config: no panel file given");
    }
    for (const auto* p : {&panel, &adjacency, &countries}) {
        if (!p->empty() && !fs::is_regular_file(*p)) {
            throw ValidationError("file not found: " + p->string());
        }
    }
    if (!(trend_alpha > 0.0 && trend_alpha < 1.0)) {
        throw ValidationError("config: trend alpha must lie in (0, 1)");
    }
    for (const auto& [s, sc] : schemes) {
        (void)sc.rule();
        if (sc.min_size < 1) {
            throw ValidationError("config: min_size must be >= 1 for scheme " + std::string(scheme_name(s)));
        }
        if ((sc.cut == "clusters" || sc.cut == "partitions") && sc.k < 1) {
            throw ValidationError("config: k must be >= 1 for scheme " + std::string(scheme_name(s)));
        }
    }
    if (scaling.rescale && !(scaling.rho > 0.0 && scaling.rho <= 1.0)) {
        throw ValidationError("config: rho must lie in (0, 1]");
    }
    if (oos_weights != "full" && oos_weights != "train") {
        throw ValidationError("config: oos_weights must be 'full' or 'train'");
    }
    if (horizon < 1) {
        throw ValidationError("config: horizon must be >= 1");
    }
    if (!(mcs.alpha >= 0.0 && mcs.alpha < 1.0)) {
        throw ValidationError("config: MCS alpha must lie in [0, 1)");
    }
    if (mcs.replications < 100) {
        throw ValidationError("config: MCS needs at least 100 replications");
    }
    if (mcs.block < 1) {
        throw ValidationError("config: MCS block length must be >= 1");
    }
    if (workers < 1) {
        throw ValidationError("config: workers must be >= 1");
    }
}

RunConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"data", "trend", "schemes", "weights", "evaluation", "mcs", "seed", "workers", "output_dir"});
    RunConfig c;
    if (j.contains("data")) {
        const auto& d = j["data"];
        check_keys(d, "data", {"panel", "adjacency", "countries", "format"});
        std::string panel, adjacency, countries, format = "auto";
        read(d, "panel", panel);
        read(d, "adjacency", adjacency);
        read(d, "countries", countries);
        read(d, "format", format);
        c.panel = resolve(base_dir, panel);
        c.adjacency = resolve(base_dir, adjacency);
        c.countries = resolve(base_dir, countries);
        if (format == "auto") c.panel_format = PanelFormat::Auto;
        else if (format == "long") c.panel_format = PanelFormat::Long;
        else if (format == "wide") c.panel_format = PanelFormat::Wide;
        else throw ValidationError("config: format must be auto, long or wide");
    }
    if (j.contains("trend")) {
        check_keys(j["trend"], "trend", {"alpha"});
        read(j["trend"], "alpha", c.trend_alpha);
    }
    if (j.contains("schemes")) {
        check_keys(j["schemes"], "schemes", {"A", "B", "C"});
        for (const auto& [key, value] : j["schemes"].items()) {
            check_keys(value, "schemes." + key, {"cut", "k", "height", "min_size"});
            auto& sc = c.schemes[*parse_scheme(key)];
            read(value, "cut", sc.cut);
            read(value, "k", sc.k);
            read(value, "height", sc.height);
            read(value, "min_size", sc.min_size);
        }
    }
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        check_keys(w, "weights", {"rescale", "rho", "dA_include_null", "cA_exclude_null"});
        read(w, "rescale", c.scaling.rescale);
        read(w, "rho", c.scaling.rho);
        read(w, "dA_include_null", c.da_include_null);
        read(w, "cA_exclude_null", c.ca_exclude_null);
    }
    if (j.contains("evaluation")) {
        const auto& e = j["evaluation"];
        check_keys(e, "evaluation", {"split_year", "horizon", "loss_granularity", "oos_weights"});
        read(e, "split_year", c.split_year);
        read(e, "horizon", c.horizon);
        read(e, "oos_weights", c.oos_weights);
        std::string gran = "period";
        read(e, "loss_granularity", gran);
        if (gran == "period") c.granularity = LossGranularity::Period;
        else if (gran == "observation") c.granularity = LossGranularity::Observation;
        else throw ValidationError("config: loss_granularity must be period or observation");
    }
    if (j.contains("mcs")) {
        const auto& m = j["mcs"];
        check_keys(m, "mcs", {"alpha", "replications", "block", "statistic"});
        read(m, "alpha", c.mcs.alpha);
        read(m, "replications", c.mcs.replications);
        read(m, "block", c.mcs.block);
        std::string stat = "SQ";
        read(m, "statistic", stat);
        const auto s = parse_mcs_statistic(stat);
        if (!s) {
            throw ValidationError("config: MCS statistic must be SQ or R");
        }
        c.mcs.statistic = *s;
    }
    read(j, "seed", c.mcs.seed);
    read(j, "workers", c.workers);
    c.mcs.workers = c.workers;
    std::string out_dir;
    read(j, "output_dir", out_dir);
    if (!out_dir.empty()) {
        c.output_dir = resolve(base_dir, out_dir);
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file: " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Analysis

Analysis::Analysis(TemperaturePanel panel, std::optional<AdjacencyList> adjacency, const RunConfig& config)
    : config_(config), panel_(std::move(panel)), adjacency_(std::move(adjacency)) {
    trends_ = fit_trends(panel_, config_.trend_alpha);
    const auto ids = panel_.ids();
    slope_all_ = slope_distance(trends_, ids);
    if (config_.ca_exclude_null) {
        std::vector<TrendFit> sig;
        std::vector<std::string> sig_ids;
        for (std::size_t i = 0; i < trends_.size(); ++i) {
            if (trends_[i].significant) {
                sig.push_back(trends_[i]);
                sig_ids.push_back(ids[i]);
            }
        }
        slope_clustered_ = slope_distance(sig, sig_ids);
    } else {
        slope_clustered_ = slope_all_;
    }
    diff_ = diff_distance(panel_);
    hamming_ = hamming_distance(panel_signs(panel_), ids);
    for (Scheme s : {Scheme::A, Scheme::B, Scheme::C}) {
        schemes_.emplace(s, run_scheme(s));
    }
}

SchemeResult Analysis::run_scheme(Scheme s) const {
    SchemeResult r;
    r.scheme = s;
    r.distances = s == Scheme::A ? slope_clustered_ : (s == Scheme::B ? diff_ : hamming_);
    r.dendrogram = agglomerate(r.distances);
    auto it = config_.schemes.find(s);
    const SchemeConfig sc = it != config_.schemes.end() ? it->second : SchemeConfig{};
    r.assignment = cut(r.dendrogram, sc.rule());
    r.assignment.scheme = std::string(scheme_name(s));
    if (s == Scheme::A) {
        for (std::size_t i = 0; i < trends_.size(); ++i) {
            if (!r.assignment.covers(panel_.country(i).id)) {
                r.assignment.null_excluded.insert(panel_.country(i).id);
            }
        }
        std::map<std::string, double> slope;
        for (std::size_t i = 0; i < trends_.size(); ++i) {
            slope[panel_.country(i).id] = trends_[i].slope;
        }
        r.assignment = order_by_mean(r.assignment, slope, true);
        if (r.assignment.num_clusters() == 4) {
            r.assignment.cluster_names = {"very high", "high", "medium", "low"};
        }
    } else {
        r.assignment = order_by_size(r.assignment);
    }
    return r;
}

const SchemeResult& Analysis::scheme(Scheme s) const {
    return schemes_.at(s);
}

std::vector<std::string> Analysis::non_significant() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < trends_.size(); ++i) {
        if (!trends_[i].significant) {
            out.push_back(panel_.country(i).id);
        }
    }
    return out;
}

WeightMatrix Analysis::weights(WeightKind kind) const {
    WeightMatrix w;
    switch (kind) {
        case WeightKind::NN:
            w = contiguity_weights(adjacency_ ? *adjacency_ : AdjacencyList(panel_), panel_);
            break;
        case WeightKind::cA:
            w = cluster_restricted_weights(slope_clustered_, scheme(Scheme::A).assignment, panel_,
                                           config_.scaling);
            break;
        case WeightKind::cB:
            w = cluster_restricted_weights(diff_, scheme(Scheme::B).assignment, panel_, config_.scaling);
            break;
        case WeightKind::cC:
            w = cluster_restricted_weights(hamming_, scheme(Scheme::C).assignment, panel_, config_.scaling);
            break;
        case WeightKind::dA:
            w = distance_weights(config_.da_include_null ? slope_all_ : slope_clustered_, panel_,
                                 config_.scaling);
            break;
        case WeightKind::dB:
            w = distance_weights(diff_, panel_, config_.scaling);
            break;
        case WeightKind::dC:
            w = distance_weights(hamming_, panel_, config_.scaling);
            break;
    }
    w.kind = kind;
    return w;
}

std::vector<ModelSpec> Analysis::model_specs() const {
    std::vector<ModelSpec> out;
    for (WeightKind k : kAllWeightKinds) {
        out.push_back({model_name(k), weights(k)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Runs

LoadedInputs load_inputs(const RunConfig& config) {
    config.validate();
    auto panel = load_panel(config.panel, config.panel_format);
    if (!config.countries.empty()) {
        panel = load_country_meta(config.countries, panel);
    }
    std::optional<AdjacencyList> adj;
    if (!config.adjacency.empty()) {
        adj = load_adjacency(config.adjacency, panel);
    }
    return {std::move(panel), std::move(adj)};
}

EvaluationReport evaluate(const TemperaturePanel& panel, const std::optional<AdjacencyList>& adjacency,
                          const RunConfig& config) {
    if (config.split_year + config.horizon > panel.last_year()) {
        throw ValidationError("split year " + std::to_string(config.split_year) + " plus horizon " +
                              std::to_string(config.horizon) + " runs past the data (last year " +
                              std::to_string(panel.last_year()) + ")");
    }
    const Analysis full(panel, adjacency, config);
    const auto specs = full.model_specs();

    EvaluationReport report;
    report.origin_year = config.split_year;
    report.horizon = config.horizon;
    report.in_sample = in_sample_evaluation(panel, specs, config.granularity);

    std::vector<ModelSpec> oos_specs = specs;
    if (config.oos_weights == "train") {
        const Analysis train(panel.slice_years(panel.first_year(), config.split_year), adjacency, config);
        oos_specs = train.model_specs();
    }
    auto oos = oos_experiment(panel, oos_specs, config.split_year, config.horizon, config.granularity);

    // MCS input in the fixed model order so that results do not depend on the loss ranking.
    std::vector<LossSeries> losses;
    for (const auto& spec : oos_specs) {
        auto it = std::find_if(oos.begin(), oos.end(), [&](const auto& r) { return r.model == spec.name; });
        losses.push_back(it->losses);
    }
    report.mcs = mcs(losses, config.mcs);
    for (const auto& step : report.mcs.elimination) {
        auto it = std::find_if(oos.begin(), oos.end(), [&](const auto& r) { return r.model == step.model; });
        report.out_of_sample.push_back(*it);
    }
    return report;
}

void cmd_trends(const RunConfig& config, std::ostream& log) {
    const auto in = load_inputs(config);
    const auto fits = fit_trends(in.panel, config.trend_alpha);
    auto out = open_output(config, "trends.csv");
    write_trend_csv(out, in.panel, fits);
    std::size_t non_sig = 0;
    log << "trends: " << fits.size() << " countries\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (!fits[i].significant) {
            ++non_sig;
            log << "  not significant: " << in.panel.country(i).name << " (p="
                << csv::format_double(fits[i].p_value) << ")\n";
        }
    }
    log << "trends: " << non_sig << " non-significant at alpha=" << config.trend_alpha << "\n";
}

void cmd_cluster(const RunConfig& config, Scheme scheme, std::ostream& log) {
    const auto in = load_inputs(config);
    const Analysis analysis(in.panel, in.adjacency, config);
    const auto& res = analysis.scheme(scheme);
    const std::string s(scheme_name(scheme));
    const auto& panel = in.panel;

    {
        auto out = open_output(config, "dendrogram_" + s + ".json");
        write_dendrogram_json(out, res.dendrogram);
    }
    {
        auto out = open_output(config, "assignment_" + s + ".json");
        write_assignment_json(out, res.assignment);
    }
    {
        auto out = open_output(config, "assignment_" + s + ".csv");
        write_assignment_csv(out, res.assignment, panel);
    }
    {
        auto out = open_output(config, "crosstab_zone_" + s + ".csv");
        write_contingency_csv(out, cross_tab(categorize_zones(panel), categorize(res.assignment), panel));
    }
    {
        auto out = open_output(config, "zone_area_" + s + ".csv");
        write_zone_area(out, res.assignment, panel);
    }
    if (scheme == Scheme::B) {
        auto out = open_output(config, "crosstab_B_A.csv");
        write_contingency_csv(out, cross_tab(res.assignment, analysis.scheme(Scheme::A).assignment, panel));
    }
    if (scheme == Scheme::C) {
        auto out = open_output(config, "crosstab_C_B.csv");
        write_contingency_csv(out, cross_tab(res.assignment, analysis.scheme(Scheme::B).assignment, panel));
    }

    ClusterSummary summary;
    if (scheme == Scheme::A) {
        std::map<std::string, double> slope;
        auto out = open_output(config, "slopes_A.csv");
        out << "country,cluster,category,slope\n";
        for (std::size_t i = 0; i < panel.num_countries(); ++i) {
            const auto& id = panel.country(i).id;
            slope[id] = analysis.trends()[i].slope;
            const auto label = res.assignment.label_of(id);
            csv::write_row(out, {id, label ? std::to_string(*label) : "", res.assignment.category_of(id),
                                 csv::format_double(slope[id])});
        }
        summary = cluster_summary(res.assignment, slope);
    } else {
        std::map<std::string, std::vector<double>> diffs;
        const auto all = panel_differences(panel);
        for (std::size_t i = 0; i < panel.num_countries(); ++i) {
            diffs[panel.country(i).id] = all[i].values;
        }
        summary = cluster_summary(res.assignment, diffs);
    }
    {
        auto out = open_output(config, "summary_" + s + ".csv");
        write_summary_csv(out, summary, res.assignment);
    }

    log << "cluster " << s << ": " << res.assignment.num_clusters() << " clusters, "
        << res.assignment.idiosyncratic.size() << " idiosyncratic, " << res.assignment.null_excluded.size()
        << " null (" << res.assignment.cut << ", " << res.assignment.partitions << " partitions)\n";
    const auto groups = res.assignment.members();
    for (std::size_t c = 0; c < groups.size(); ++c) {
        log << "  cluster " << c + 1 << ": " << groups[c].size() << " members, mean "
            << csv::format_double(summary.clusters[c].mean) << ", sd "
            << csv::format_double(summary.clusters[c].sd) << "\n";
    }
}

void cmd_weights(const RunConfig& config, WeightKind kind, std::ostream& log) {
    const auto in = load_inputs(config);
    const Analysis analysis(in.panel, in.adjacency, config);
    const auto w = analysis.weights(kind);
    w.validate();
    const std::string k(weight_kind_name(kind));
    {
        auto out = open_output(config, "weights_" + k + ".csv");
        write_weights_csv(out, w);
    }
    {
        auto out = open_output(config, "weights_" + k + ".json");
        write_weights_meta_json(out, w);
    }
    log << "weights " << k << ": " << w.labels.size() << " rows, " << w.num_zero_rows() << " zero rows\n";
}

void cmd_fit(const RunConfig& config, WeightKind kind, std::ostream& log) {
    const auto in = load_inputs(config);
    const Analysis analysis(in.panel, in.adjacency, config);
    const auto model = fit_star(in.panel, analysis.weights(kind));
    const auto fitted = fitted_levels(model, in.panel);
    const std::string k(weight_kind_name(kind));
    {
        auto out = open_output(config, "coefficients_" + k + ".csv");
        write_coefficients_csv(out, model);
    }
    {
        auto out = open_output(config, "fitted_" + k + ".csv");
        write_levels_csv(out, fitted);
    }
    const Eigen::MatrixXd observed = in.panel.values().rightCols(fitted.levels.cols());
    log << model_name(kind) << ": in-sample FN " << csv::format_double(frobenius_norm(observed, fitted.levels))
        << "\n";
    for (const auto& id : model.nonstationary()) {
        log << "  warning: |phi| + |psi| >= 1 for " << id << "\n";
    }
    for (std::size_t i = 0; i < model.equations.size(); ++i) {
        if (!model.equations[i].note.empty()) {
            log << "  " << model.countries[i] << ": " << model.equations[i].note << "\n";
        }
    }
}

void cmd_forecast(const RunConfig& config, const std::vector<WeightKind>& kinds, int origin, int horizon,
                  std::ostream& log) {
    if (horizon < 1) {
        throw ValidationError("horizon must be >= 1");
    }
    const auto in = load_inputs(config);
    if (origin > in.panel.last_year() || origin - in.panel.first_year() + 1 < 4) {
        throw ValidationError("forecast origin " + std::to_string(origin) + " outside the usable panel range");
    }
    const auto train = in.panel.slice_years(in.panel.first_year(), origin);
    const Analysis analysis(config.oos_weights == "train" ? train : in.panel, in.adjacency, config);
    for (WeightKind kind : kinds) {
        const auto model = fit_star(train, analysis.weights(kind));
        const auto fc = forecast(model, train, horizon);
        auto out = open_output(config, "forecast_" + std::string(weight_kind_name(kind)) + ".csv");
        write_levels_csv(out, fc);
        log << model_name(kind) << ": forecast " << origin + 1 << "-" << origin + horizon;
        const int observed_to = std::min(origin + horizon, in.panel.last_year());
        if (observed_to > origin) {
            const auto obs = in.panel.slice_years(origin + 1, observed_to).values();
            log << ", FN over " << observed_to - origin << " observed years "
                << csv::format_double(frobenius_norm(obs, fc.levels.leftCols(obs.cols())));
        }
        log << "\n";
    }
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
    const auto in = load_inputs(config);
    const auto report = evaluate(in.panel, in.adjacency, config);
    {
        auto out = open_output(config, "report.csv");
        write_report_csv(out, report);
    }
    {
        auto out = open_output(config, "report.json");
        write_report_json(out, report);
    }
    {
        auto out = open_output(config, "mcs.json");
        write_mcs_json(out, report.mcs);
    }
    {
        auto out = open_output(config, "losses_in_sample.csv");
        write_loss_csv(out, report.in_sample);
    }
    {
        auto out = open_output(config, "losses_out_of_sample.csv");
        write_loss_csv(out, report.out_of_sample);
    }
    log << "in-sample FN:\n";
    for (const auto& r : report.in_sample) {
        log << "  " << r.model << " " << csv::format_double(r.fn) << "\n";
    }
    log << "out-of-sample FN (" << report.origin_year + 1 << "-" << report.origin_year + report.horizon
        << "), MCS elimination order:\n";
    for (std::size_t i = 0; i < report.out_of_sample.size(); ++i) {
        log << "  " << report.out_of_sample[i].model << " " << csv::format_double(report.out_of_sample[i].fn)
            << " p=" << csv::format_double(report.mcs.elimination[i].p_value) << "\n";
    }
    log << "MCS survivors at alpha=" << config.mcs.alpha << ":";
    for (const auto& m : report.mcs.surviving) {
        log << " " << m;
    }
    log << "\n";
    for (const auto& w : report.mcs.warnings) {
        log << "  warning: " << w << "\n";
    }
}

std::vector<LossSeries> load_losses(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open loss file: " + path.string());
    }
    std::string line;
    std::getline(in, line);
    const auto header = csv::split_line(line);
    if (header.size() < 3 || csv::lower(csv::trim(header[0])) != "model") {
        throw ValidationError(path.string() + ": loss file needs columns model,period,loss");
    }
    std::vector<std::string> order;
    std::map<std::string, std::map<long, double>> by_model;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split_line(line);
        const auto period = f.size() >= 3 ? csv::parse_int(f[1]) : std::nullopt;
        const auto loss = f.size() >= 3 ? csv::parse_double(f[2]) : std::nullopt;
        if (!period || !loss) {
            throw ValidationError("bad loss record at " + path.string() + ":" + std::to_string(line_no));
        }
        const std::string model = csv::trim(f[0]);
        if (!by_model.contains(model)) order.push_back(model);
        if (!by_model[model].emplace(*period, *loss).second) {
            throw ValidationError("duplicate period for " + model + " at line " + std::to_string(line_no));
        }
    }
    std::vector<LossSeries> out;
    for (const auto& m : order) {
        LossSeries s{m, {}};
        for (const auto& [p, v] : by_model[m]) s.losses.push_back(v);
        if (!out.empty() && by_model[m].size() != by_model[order.front()].size()) {
            throw ValidationError("loss series for " + m + " has a different number of periods");
        }
        out.push_back(std::move(s));
    }
    return out;
}

void cmd_mcs(const RunConfig& config, const fs::path& losses_path, std::ostream& log) {
    std::vector<LossSeries> losses;
    if (!losses_path.empty()) {
        if (!fs::is_regular_file(losses_path)) {
            throw ValidationError("file not found: " + losses_path.string());
        }
        losses = load_losses(losses_path);
    } else {
        const auto in = load_inputs(config);
        const Analysis analysis(in.panel, in.adjacency, config);
        const auto specs = analysis.model_specs();
        auto oos = oos_experiment(in.panel, specs, config.split_year, config.horizon, config.granularity);
        for (const auto& spec : specs) {
            auto it = std::find_if(oos.begin(), oos.end(), [&](const auto& r) { return r.model == spec.name; });
            losses.push_back(it->losses);
        }
    }
    const auto report = mcs(losses, config.mcs);
    auto out = open_output(config, "mcs.json");
    write_mcs_json(out, report);
    log << "MCS (" << mcs_statistic_name(report.statistic) << ", B=" << report.replications
        << ", block=" << report.block << "):\n";
    for (const auto& s : report.elimination) {
        log << "  " << s.model << " p=" << csv::format_double(s.p_value) << "\n";
    }
    for (const auto& w : report.warnings) {
        log << "  warning: " << w << "\n";
    }
}

}  // namespace tempstar
