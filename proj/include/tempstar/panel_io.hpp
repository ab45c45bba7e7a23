#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tempstar {

enum class Zone {
    Europe,
    Asia,
    Eurasia,
    Africa,
    NorthAmerica,
    CentralAmerica,
    SouthAmerica,
    Oceania,
};

inline constexpr std::array<Zone, 8> kAllZones = {
    Zone::Europe,       Zone::Asia,           Zone::Eurasia,      Zone::Africa,
    Zone::NorthAmerica, Zone::CentralAmerica, Zone::SouthAmerica, Zone::Oceania,
};

std::string_view zone_name(Zone zone);
// Accepts the display names ("North America") and compact forms ("north_america").
std::optional<Zone> parse_zone(std::string_view text);

struct CountryMeta {
    std::string id;
    std::string name;
    std::optional<Zone> zone;
    std::optional<double> area_km2;
};

/// Complete country-by-year panel of annual mean temperatures (degrees C).
///
/// Rows follow `countries()`, columns follow consecutive calendar years starting at
/// `first_year()`. The panel is immutable once built; every downstream matrix shares
/// its row order.
class TemperaturePanel {
public:
    TemperaturePanel(std::vector<CountryMeta> countries, int first_year, Eigen::MatrixXd values);

    std::size_t num_countries() const { return countries_.size(); }
    std::size_t num_years() const { return static_cast<std::size_t>(values_.cols()); }
    int first_year() const { return first_year_; }
    int last_year() const { return first_year_ + static_cast<int>(num_years()) - 1; }
    std::vector<int> years() const;

    const std::vector<CountryMeta>& countries() const { return countries_; }
    const CountryMeta& country(std::size_t i) const { return countries_.at(i); }
    std::vector<std::string> ids() const;
    std::optional<std::size_t> index_of(std::string_view id) const;

    const Eigen::MatrixXd& values() const { return values_; }
    std::vector<double> series(std::size_t i) const;

    // Column block for calendar years [from, to].
    TemperaturePanel slice_years(int from, int to) const;
    // Copy with metadata replaced; ids must match one to one.
    TemperaturePanel with_metadata(const std::vector<CountryMeta>& meta) const;

private:
    std::vector<CountryMeta> countries_;
    int first_year_;
    Eigen::MatrixXd values_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Undirected, irreflexive contiguity relation over panel ids.
class AdjacencyList {
public:
    AdjacencyList() = default;
    explicit AdjacencyList(const TemperaturePanel& panel);

    // Throws ValidationError for unknown ids or a self edge.
    void add_edge(const std::string& a, const std::string& b);

    const std::set<std::string>& neighbors(const std::string& id) const;
    const std::map<std::string, std::set<std::string>>& all() const { return neighbors_; }
    std::size_t num_edges() const;

private:
    std::map<std::string, std::set<std::string>> neighbors_;
};

enum class PanelFormat { Auto, Long, Wide };

/// Long files need the columns `country,year,temperature` (any order, extra columns
/// ignored). Wide files carry one row per country and one column per year; optional
/// `name`, `zone`, `area` columns populate the metadata. Countries come back sorted by id.
TemperaturePanel load_panel(const std::filesystem::path& path, PanelFormat format = PanelFormat::Auto);
TemperaturePanel parse_panel(std::istream& in, PanelFormat format = PanelFormat::Auto,
                             std::string_view source = "<stream>");

// Metadata table `country,name,zone,area`; ids absent from the table keep their defaults.
TemperaturePanel load_country_meta(const std::filesystem::path& path, const TemperaturePanel& panel);
TemperaturePanel parse_country_meta(std::istream& in, const TemperaturePanel& panel,
                                    std::string_view source = "<stream>");

// Edge list `country_a,country_b`.
AdjacencyList load_adjacency(const std::filesystem::path& path, const TemperaturePanel& panel);
AdjacencyList parse_adjacency(std::istream& in, const TemperaturePanel& panel,
                              std::string_view source = "<stream>");

void write_panel_long(std::ostream& out, const TemperaturePanel& panel);
void write_panel_wide(std::ostream& out, const TemperaturePanel& panel);

// Train keeps years up to and including `last_train_year`, test the rest.
std::pair<TemperaturePanel, TemperaturePanel> split_panel(const TemperaturePanel& panel,
                                                          int last_train_year);

}  // namespace tempstar
