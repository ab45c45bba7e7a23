#include "tempstar/panel_io.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace tempstar {

namespace {

std::string location(std::string_view source, std::size_t line) {
    std::ostringstream os;
    os << source << ":" << line;
    return os.str();
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open file: " + path.string());
    }
    return in;
}

std::string compact(std::string_view text) {
    std::string out;
    for (char c : csv::lower(csv::trim(text))) {
        if (c != ' ' && c != '_' && c != '-') {
            out.push_back(c);
        }
    }
    return out;
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       std::initializer_list<std::string_view> names) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string h = compact(header[i]);
        for (auto name : names) {
            if (h == name) {
                return i;
            }
        }
    }
    return std::nullopt;
}

// Collects (country, year, value) triples and assembles a validated panel.
class PanelBuilder {
public:
    void add(const std::string& country, int year, double value, const std::string& where) {
        auto [it, inserted] = cells_[country].emplace(year, value);
        if (!inserted) {
            throw ValidationError("duplicate observation for " + country + "/" +
                                  std::to_string(year) + " at " + where);
        }
    }

    void register_country(const std::string& country) { cells_.try_emplace(country); }

    void set_meta(const std::string& country, CountryMeta meta) { meta_[country] = std::move(meta); }

    TemperaturePanel build() const {
        if (cells_.empty()) {
            throw ValidationError("panel contains no countries");
        }
        int first = std::numeric_limits<int>::max();
        int last = std::numeric_limits<int>::min();
        for (const auto& [country, years] : cells_) {
            if (!years.empty()) {
                first = std::min(first, years.begin()->first);
                last = std::max(last, years.rbegin()->first);
            }
        }
        if (first > last) {
            throw ValidationError("panel contains no observations");
        }
        const auto num_years = static_cast<Eigen::Index>(last - first + 1);
        std::vector<std::string> gaps;
        std::vector<CountryMeta> countries;
        Eigen::MatrixXd values(static_cast<Eigen::Index>(cells_.size()), num_years);
        Eigen::Index row = 0;
        for (const auto& [country, years] : cells_) {
            for (int y = first; y <= last; ++y) {
                auto it = years.find(y);
                if (it == years.end()) {
                    gaps.push_back(country + "/" + std::to_string(y));
                    continue;
                }
                values(row, y - first) = it->second;
            }
            auto meta_it = meta_.find(country);
            CountryMeta meta = meta_it != meta_.end() ? meta_it->second : CountryMeta{};
            meta.id = country;
            if (meta.name.empty()) {
                meta.name = country;
            }
            countries.push_back(std::move(meta));
            ++row;
        }
        if (!gaps.empty()) {
            std::ostringstream os;
            os << "missing observations (" << gaps.size() << "):";
            const std::size_t shown = std::min<std::size_t>(gaps.size(), 50);
            for (std::size_t i = 0; i < shown; ++i) {
                os << " " << gaps[i];
            }
            if (shown < gaps.size()) {
                os << " ...";
            }
            throw ValidationError(os.str());
        }
        return TemperaturePanel(std::move(countries), first, std::move(values));
    }

private:
    std::map<std::string, std::map<int, double>> cells_;
    std::map<std::string, CountryMeta> meta_;
};

bool looks_like_year(std::string_view text) {
    auto v = csv::parse_int(text);
    return v.has_value() && *v >= 0 && *v <= 9999;
}

void parse_long(std::istream& in, const std::vector<std::string>& header, std::string_view source,
                PanelBuilder& builder) {
    const auto c_country = find_column(header, {"country", "countryid", "id", "code"});
    const auto c_year = find_column(header, {"year"});
    const auto c_temp = find_column(header, {"temperature", "temp", "value"});
    if (!c_country || !c_year || !c_temp) {
        throw ValidationError(std::string(source) +
                              ": long format needs columns country,year,temperature");
    }
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split_line(line);
        const std::string where = location(source, line_no);
        const std::size_t needed = std::max({*c_country, *c_year, *c_temp}) + 1;
        if (fields.size() < needed) {
            throw ValidationError("too few fields at " + where);
        }
        const std::string country = csv::trim(fields[*c_country]);
        if (country.empty()) {
            throw ValidationError("empty country id at " + where);
        }
        const auto year = csv::parse_int(fields[*c_year]);
        if (!year) {
            throw ValidationError("non-integer year '" + fields[*c_year] + "' at " + where);
        }
        const auto value = csv::parse_double(fields[*c_temp]);
        if (!value) {
            throw ValidationError("non-numeric temperature '" + fields[*c_temp] + "' for " +
                                  country + "/" + std::to_string(*year) + " at " + where);
        }
        builder.add(country, static_cast<int>(*year), *value, where);
    }
}

void parse_wide(std::istream& in, const std::vector<std::string>& header, std::string_view source,
                PanelBuilder& builder) {
    std::vector<std::pair<std::size_t, int>> year_columns;
    std::vector<std::size_t> other;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (looks_like_year(header[i])) {
            year_columns.emplace_back(i, static_cast<int>(*csv::parse_int(header[i])));
        } else {
            other.push_back(i);
        }
    }
    if (year_columns.empty() || other.empty()) {
        throw ValidationError(std::string(source) +
                              ": wide format needs a country column and year columns");
    }
    const auto c_name = find_column(header, {"name", "countryname"});
    const auto c_zone = find_column(header, {"zone", "region"});
    const auto c_area = find_column(header, {"area", "areakm2", "landarea"});
    auto c_country = find_column(header, {"country", "countryid", "id", "code"});
    if (!c_country) {
        c_country = other.front();
    }

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split_line(line);
        const std::string where = location(source, line_no);
        if (fields.size() < header.size()) {
            throw ValidationError("too few fields at " + where);
        }
        const std::string country = csv::trim(fields[*c_country]);
        if (country.empty()) {
            throw ValidationError("empty country id at " + where);
        }
        builder.register_country(country);
        CountryMeta meta;
        if (c_name && c_name != c_country) {
            meta.name = csv::trim(fields[*c_name]);
        }
        if (c_zone && !csv::trim(fields[*c_zone]).empty()) {
            meta.zone = parse_zone(fields[*c_zone]);
            if (!meta.zone) {
                throw ValidationError("unknown zone '" + fields[*c_zone] + "' at " + where);
            }
        }
        if (c_area && !csv::trim(fields[*c_area]).empty()) {
            meta.area_km2 = csv::parse_double(fields[*c_area]);
            if (!meta.area_km2 || *meta.area_km2 < 0.0) {
                throw ValidationError("invalid area '" + fields[*c_area] + "' at " + where);
            }
        }
        builder.set_meta(country, std::move(meta));
        for (auto [col, year] : year_columns) {
            const std::string cell = csv::trim(fields[col]);
            if (cell.empty()) {
                continue;  // reported as a gap by the builder
            }
            const auto value = csv::parse_double(cell);
            if (!value) {
                throw ValidationError("non-numeric temperature '" + cell + "' for " + country +
                                      "/" + std::to_string(year) + " at " + where);
            }
            builder.add(country, year, *value, where);
        }
    }
}

}  // namespace

std::string_view zone_name(Zone zone) {
    switch (zone) {
        case Zone::Europe: return "Europe";
        case Zone::Asia: return "Asia";
        case Zone::Eurasia: return "Eurasia";
        case Zone::Africa: return "Africa";
        case Zone::NorthAmerica: return "North America";
        case Zone::CentralAmerica: return "Central America";
        case Zone::SouthAmerica: return "South America";
        case Zone::Oceania: return "Oceania";
    }
    return "?";
}

std::optional<Zone> parse_zone(std::string_view text) {
    const std::string key = compact(text);
    for (Zone z : kAllZones) {
        if (compact(zone_name(z)) == key) {
            return z;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// TemperaturePanel

TemperaturePanel::TemperaturePanel(std::vector<CountryMeta> countries, int first_year,
                                   Eigen::MatrixXd values)
    : countries_(std::move(countries)), first_year_(first_year), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != countries_.size()) {
        throw ValidationError("panel values have " + std::to_string(values_.rows()) +
                              " rows for " + std::to_string(countries_.size()) + " countries");
    }
    if (values_.cols() == 0) {
        throw ValidationError("panel has no years");
    }
    if (!values_.allFinite()) {
        throw ValidationError("panel contains non-finite temperatures");
    }
    for (std::size_t i = 0; i < countries_.size(); ++i) {
        if (countries_[i].id.empty()) {
            throw ValidationError("empty country id in panel");
        }
        if (!index_.emplace(countries_[i].id, i).second) {
            throw ValidationError("duplicate country id in panel: " + countries_[i].id);
        }
        if (countries_[i].area_km2 && *countries_[i].area_km2 < 0.0) {
            throw ValidationError("negative area for " + countries_[i].id);
        }
    }
}

std::vector<int> TemperaturePanel::years() const {
    std::vector<int> out(num_years());
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t] = first_year_ + static_cast<int>(t);
    }
    return out;
}

std::vector<std::string> TemperaturePanel::ids() const {
    std::vector<std::string> out;
    out.reserve(countries_.size());
    for (const auto& c : countries_) {
        out.push_back(c.id);
    }
    return out;
}

std::optional<std::size_t> TemperaturePanel::index_of(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<double> TemperaturePanel::series(std::size_t i) const {
    const auto row = values_.row(static_cast<Eigen::Index>(i));
    return {row.begin(), row.end()};
}

TemperaturePanel TemperaturePanel::slice_years(int from, int to) const {
    if (from < first_year_ || to > last_year() || from > to) {
        throw ValidationError("year slice [" + std::to_string(from) + ", " + std::to_string(to) +
                              "] outside panel range");
    }
    Eigen::MatrixXd block = values_.middleCols(from - first_year_, to - from + 1);
    return TemperaturePanel(countries_, from, std::move(block));
}

TemperaturePanel TemperaturePanel::with_metadata(const std::vector<CountryMeta>& meta) const {
    if (meta.size() != countries_.size()) {
        throw ValidationError("metadata size mismatch");
    }
    for (std::size_t i = 0; i < meta.size(); ++i) {
        if (meta[i].id != countries_[i].id) {
            throw ValidationError("metadata id mismatch: " + meta[i].id);
        }
    }
    return TemperaturePanel(meta, first_year_, values_);
}

// ---------------------------------------------------------------------------
// AdjacencyList

AdjacencyList::AdjacencyList(const TemperaturePanel& panel) {
    for (const auto& c : panel.countries()) {
        neighbors_[c.id];
    }
}

void AdjacencyList::add_edge(const std::string& a, const std::string& b) {
    for (const auto* id : {&a, &b}) {
        if (!neighbors_.contains(*id)) {
            throw ValidationError("adjacency references unknown country id: " + *id);
        }
    }
    if (a == b) {
        throw ValidationError("self edge in adjacency: " + a);
    }
    neighbors_[a].insert(b);
    neighbors_[b].insert(a);
}

const std::set<std::string>& AdjacencyList::neighbors(const std::string& id) const {
    auto it = neighbors_.find(id);
    if (it == neighbors_.end()) {
        throw ValidationError("unknown country id: " + id);
    }
    return it->second;
}

std::size_t AdjacencyList::num_edges() const {
    std::size_t twice = 0;
    for (const auto& [id, n] : neighbors_) {
        twice += n.size();
    }
    return twice / 2;
}

// ---------------------------------------------------------------------------
// Loaders

TemperaturePanel parse_panel(std::istream& in, PanelFormat format, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(std::string(source) + ": empty panel file");
    }
    const auto header = csv::split_line(line);
    if (format == PanelFormat::Auto) {
        format = find_column(header, {"year"}) ? PanelFormat::Long : PanelFormat::Wide;
    }
    PanelBuilder builder;
    if (format == PanelFormat::Long) {
        parse_long(in, header, source, builder);
    } else {
        parse_wide(in, header, source, builder);
    }
    return builder.build();
}

TemperaturePanel load_panel(const std::filesystem::path& path, PanelFormat format) {
    auto in = open_input(path);
    return parse_panel(in, format, path.string());
}

TemperaturePanel parse_country_meta(std::istream& in, const TemperaturePanel& panel,
                                    std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(std::string(source) + ": empty metadata file");
    }
    const auto header = csv::split_line(line);
    const auto c_country = find_column(header, {"country", "countryid", "id", "code"});
    if (!c_country) {
        throw ValidationError(std::string(source) + ": metadata needs a country column");
    }
    const auto c_name = find_column(header, {"name", "countryname"});
    const auto c_zone = find_column(header, {"zone", "region"});
    const auto c_area = find_column(header, {"area", "areakm2", "landarea"});

    std::vector<CountryMeta> meta = panel.countries();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split_line(line);
        const std::string where = location(source, line_no);
        if (fields.size() < header.size()) {
            throw ValidationError("too few fields at " + where);
        }
        const std::string id = csv::trim(fields[*c_country]);
        const auto idx = panel.index_of(id);
        if (!idx) {
            continue;  // metadata tables commonly list more countries than the panel
        }
        CountryMeta& m = meta[*idx];
        if (c_name && !csv::trim(fields[*c_name]).empty()) {
            m.name = csv::trim(fields[*c_name]);
        }
        if (c_zone && !csv::trim(fields[*c_zone]).empty()) {
            m.zone = parse_zone(fields[*c_zone]);
            if (!m.zone) {
                throw ValidationError("unknown zone '" + fields[*c_zone] + "' at " + where);
            }
        }
        if (c_area && !csv::trim(fields[*c_area]).empty()) {
            m.area_km2 = csv::parse_double(fields[*c_area]);
            if (!m.area_km2 || *m.area_km2 < 0.0) {
                throw ValidationError("invalid area '" + fields[*c_area] + "' at " + where);
            }
        }
    }
    return panel.with_metadata(meta);
}

TemperaturePanel load_country_meta(const std::filesystem::path& path, const TemperaturePanel& panel) {
    auto in = open_input(path);
    return parse_country_meta(in, panel, path.string());
}

AdjacencyList parse_adjacency(std::istream& in, const TemperaturePanel& panel,
                              std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(std::string(source) + ": empty adjacency file");
    }
    const auto header = csv::split_line(line);
    auto c_a = find_column(header, {"countrya", "a", "from"});
    auto c_b = find_column(header, {"countryb", "b", "to"});
    if (!c_a || !c_b) {
        throw ValidationError(std::string(source) + ": adjacency needs columns country_a,country_b");
    }
    AdjacencyList adj(panel);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split_line(line);
        const std::string where = location(source, line_no);
        if (fields.size() <= std::max(*c_a, *c_b)) {
            throw ValidationError("too few fields at " + where);
        }
        try {
            adj.add_edge(csv::trim(fields[*c_a]), csv::trim(fields[*c_b]));
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(e.what()) + " at " + where);
        }
    }
    return adj;
}

AdjacencyList load_adjacency(const std::filesystem::path& path, const TemperaturePanel& panel) {
    auto in = open_input(path);
    return parse_adjacency(in, panel, path.string());
}

void write_panel_long(std::ostream& out, const TemperaturePanel& panel) {
    out << "country,year,temperature\n";
    const auto& v = panel.values();
    for (std::size_t i = 0; i < panel.num_countries(); ++i) {
        for (std::size_t t = 0; t < panel.num_years(); ++t) {
            csv::write_row(out, {panel.country(i).id,
                                 std::to_string(panel.first_year() + static_cast<int>(t)),
                                 csv::format_double(v(static_cast<Eigen::Index>(i),
                                                      static_cast<Eigen::Index>(t)))});
        }
    }
}

void write_panel_wide(std::ostream& out, const TemperaturePanel& panel) {
    std::vector<std::string> header{"country", "name", "zone", "area"};
    for (int y : panel.years()) {
        header.push_back(std::to_string(y));
    }
    csv::write_row(out, header);
    const auto& v = panel.values();
    for (std::size_t i = 0; i < panel.num_countries(); ++i) {
        const auto& c = panel.country(i);
        std::vector<std::string> row{c.id, c.name, c.zone ? std::string(zone_name(*c.zone)) : "",
                                     c.area_km2 ? csv::format_double(*c.area_km2) : ""};
        for (std::size_t t = 0; t < panel.num_years(); ++t) {
            row.push_back(
                csv::format_double(v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t))));
        }
        csv::write_row(out, row);
    }
}

std::pair<TemperaturePanel, TemperaturePanel> split_panel(const TemperaturePanel& panel,
                                                          int last_train_year) {
    if (last_train_year <= panel.first_year() || last_train_year >= panel.last_year()) {
        throw ValidationError("split year " + std::to_string(last_train_year) +
                              " must lie in [" + std::to_string(panel.first_year() + 1) + ", " +
                              std::to_string(panel.last_year() - 1) + "]");
    }
    return {panel.slice_years(panel.first_year(), last_train_year),
            panel.slice_years(last_train_year + 1, panel.last_year())};
}

}  // namespace tempstar
