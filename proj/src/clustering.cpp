#include "tempstar/clustering.hpp"

#include "tempstar/csv.hpp"
#include "tempstar/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tempstar {

namespace {

constexpr std::string_view kIdiosyncratic = "idiosyncratic";
constexpr std::string_view kNull = "null";

// Leaf groups after applying the first `applied` merges, ordered by smallest leaf.
std::vector<std::vector<std::size_t>> groups_after(const Dendrogram& dendro, std::size_t applied) {
    const std::size_t k = dendro.num_leaves();
    std::vector<std::size_t> parent(k + applied);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t m = 0; m < applied; ++m) {
        parent[dendro.merges[m].left] = k + m;
        parent[dendro.merges[m].right] = k + m;
    }
    auto root = [&](std::size_t node) {
        while (parent[node] != node) {
            node = parent[node];
        }
        return node;
    };
    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t leaf = 0; leaf < k; ++leaf) {
        by_root[root(leaf)].push_back(leaf);
    }
    std::vector<std::vector<std::size_t>> out;
    out.reserve(by_root.size());
    for (auto& [r, leaves] : by_root) {
        out.push_back(std::move(leaves));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::size_t count_large(const std::vector<std::vector<std::size_t>>& groups, std::size_t min_size) {
    return static_cast<std::size_t>(std::count_if(
        groups.begin(), groups.end(), [&](const auto& g) { return g.size() >= min_size; }));
}

std::size_t auto_gap_partitions(const Dendrogram& dendro) {
    const std::size_t k = dendro.num_leaves();
    const std::size_t num_merges = dendro.merges.size();
    const std::size_t window = (k + 2) / 3;
    const std::size_t first = num_merges > window ? std::max<std::size_t>(1, num_merges - window) : 1;
    double best_ratio = -1.0;
    std::size_t best_m = num_merges;  // no candidate: apply everything
    for (std::size_t m = first; m < num_merges; ++m) {
        const double prev = dendro.merges[m - 1].height;
        const double cur = dendro.merges[m].height;
        double ratio = 1.0;
        if (prev > 0.0) {
            ratio = cur / prev;
        } else if (cur > 0.0) {
            ratio = std::numeric_limits<double>::infinity();
        }
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_m = m;
        }
    }
    return k - best_m;
}

}  // namespace

Dendrogram agglomerate(const DistanceMatrix& dist) {
    const std::size_t k = dist.size();
    if (k < 2) {
        throw ValidationError("clustering needs at least 2 items, got " + std::to_string(k));
    }
    if (!dist.values.allFinite()) {
        throw NumericalError("distance matrix contains non-finite entries");
    }
    dist.validate();

    // Slot i always holds the cluster whose smallest leaf is i.
    Eigen::MatrixXd sums = dist.values;
    std::vector<std::size_t> size(k, 1);
    std::vector<std::size_t> node(k);
    std::iota(node.begin(), node.end(), std::size_t{0});
    std::vector<std::size_t> active(k);
    std::iota(active.begin(), active.end(), std::size_t{0});

    Dendrogram dendro;
    dendro.labels = dist.labels;
    dendro.merges.reserve(k - 1);

    while (active.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_a = 0;
        std::size_t best_b = 0;
        for (std::size_t ia = 0; ia < active.size(); ++ia) {
            const std::size_t a = active[ia];
            for (std::size_t ib = ia + 1; ib < active.size(); ++ib) {
                const std::size_t b = active[ib];
                const double h = sums(a, b) / static_cast<double>(size[a] * size[b]);
                if (h < best) {
                    best = h;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const std::size_t new_size = size[best_a] + size[best_b];
        dendro.merges.push_back({node[best_a], node[best_b], best, new_size});

        for (std::size_t c : active) {
            if (c != best_a && c != best_b) {
                sums(best_a, c) += sums(best_b, c);
                sums(c, best_a) = sums(best_a, c);
            }
        }
        size[best_a] = new_size;
        node[best_a] = k + dendro.merges.size() - 1;
        active.erase(std::find(active.begin(), active.end(), best_b));
    }
    return dendro;
}

std::string CutRule::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Partitions: os << "partitions k=" << k; break;
        case Kind::Clusters: os << "clusters k=" << k; break;
        case Kind::Height: os << "height h=" << csv::format_double(height); break;
        case Kind::AutoGap: os << "auto-gap"; break;
    }
    os << " min_size=" << min_size;
    return os.str();
}

ClusterAssignment cut(const Dendrogram& dendro, const CutRule& rule) {
    const std::size_t k = dendro.num_leaves();
    if (k == 0 || dendro.merges.size() + 1 != k) {
        throw ValidationError("malformed dendrogram");
    }
    if (rule.min_size < 1) {
        throw ValidationError("min_size must be at least 1");
    }
    std::size_t applied = 0;
    switch (rule.kind) {
        case CutRule::Kind::Partitions:
            if (rule.k < 1 || rule.k > k) {
                throw ValidationError("cluster count " + std::to_string(rule.k) + " outside [1, " +
                                      std::to_string(k) + "]");
            }
            applied = k - rule.k;
            break;
        case CutRule::Kind::Clusters: {
            if (rule.k < 1 || rule.k > k) {
                throw ValidationError("cluster count " + std::to_string(rule.k) + " outside [1, " +
                                      std::to_string(k) + "]");
            }
            bool found = false;
            for (std::size_t p = 1; p <= k && !found; ++p) {
                if (count_large(groups_after(dendro, k - p), rule.min_size) == rule.k) {
                    applied = k - p;
                    found = true;
                }
            }
            if (!found) {
                throw ValidationError("no cut of the dendrogram yields " + std::to_string(rule.k) +
                                      " clusters of size >= " + std::to_string(rule.min_size));
            }
            break;
        }
        case CutRule::Kind::Height:
            while (applied < dendro.merges.size() && dendro.merges[applied].height <= rule.height) {
                ++applied;
            }
            break;
        case CutRule::Kind::AutoGap:
            applied = k - auto_gap_partitions(dendro);
            break;
    }

    const auto groups = groups_after(dendro, applied);
    ClusterAssignment out;
    out.cut = rule.describe();
    out.partitions = groups.size();
    out.cut_height = applied > 0 ? dendro.merges[applied - 1].height : 0.0;
    int next = 1;
    for (const auto& g : groups) {
        if (g.size() < rule.min_size) {
            for (std::size_t leaf : g) {
                out.idiosyncratic.insert(dendro.labels[leaf]);
            }
            continue;
        }
        for (std::size_t leaf : g) {
            out.labels[dendro.labels[leaf]] = next;
        }
        ++next;
    }
    return out;
}

// ---------------------------------------------------------------------------
// ClusterAssignment

int ClusterAssignment::num_clusters() const {
    int k = 0;
    for (const auto& [id, c] : labels) {
        k = std::max(k, c);
    }
    return k;
}

std::optional<int> ClusterAssignment::label_of(const std::string& id) const {
    auto it = labels.find(id);
    if (it == labels.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::vector<std::string>> ClusterAssignment::members() const {
    std::vector<std::vector<std::string>> out(static_cast<std::size_t>(num_clusters()));
    for (const auto& [id, c] : labels) {
        out[static_cast<std::size_t>(c - 1)].push_back(id);
    }
    return out;
}

bool ClusterAssignment::covers(const std::string& id) const {
    return labels.contains(id) || idiosyncratic.contains(id) || null_excluded.contains(id);
}

std::string ClusterAssignment::category_of(const std::string& id) const {
    if (auto c = label_of(id)) {
        const auto idx = static_cast<std::size_t>(*c - 1);
        return idx < cluster_names.size() ? cluster_names[idx] : std::to_string(*c);
    }
    if (idiosyncratic.contains(id)) {
        return std::string(kIdiosyncratic);
    }
    if (null_excluded.contains(id)) {
        return std::string(kNull);
    }
    throw ValidationError("country not covered by assignment: " + id);
}

ClusterAssignment relabel(const ClusterAssignment& assign, const std::vector<int>& order) {
    const int k = assign.num_clusters();
    if (static_cast<int>(order.size()) != k) {
        throw ValidationError("relabel order must list every cluster once");
    }
    std::vector<int> new_index(static_cast<std::size_t>(k) + 1, 0);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const int old = order[r];
        if (old < 1 || old > k || new_index[static_cast<std::size_t>(old)] != 0) {
            throw ValidationError("relabel order must be a permutation of 1..k");
        }
        new_index[static_cast<std::size_t>(old)] = static_cast<int>(r) + 1;
    }
    ClusterAssignment out = assign;
    for (auto& [id, c] : out.labels) {
        c = new_index[static_cast<std::size_t>(c)];
    }
    if (!assign.cluster_names.empty()) {
        out.cluster_names.assign(static_cast<std::size_t>(k), "");
        for (std::size_t r = 0; r < order.size(); ++r) {
            const auto old = static_cast<std::size_t>(order[r] - 1);
            if (old < assign.cluster_names.size()) {
                out.cluster_names[r] = assign.cluster_names[old];
            }
        }
    }
    return out;
}

ClusterAssignment order_by_mean(const ClusterAssignment& assign,
                                const std::map<std::string, double>& score, bool descending) {
    const auto groups = assign.members();
    std::vector<std::pair<double, int>> keyed;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        double sum = 0.0;
        for (const auto& id : groups[c]) {
            auto it = score.find(id);
            if (it == score.end()) {
                throw ValidationError("no score for " + id);
            }
            sum += it->second;
        }
        const double mean = groups[c].empty() ? 0.0 : sum / static_cast<double>(groups[c].size());
        keyed.emplace_back(descending ? -mean : mean, static_cast<int>(c) + 1);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<int> order;
    for (const auto& [key, c] : keyed) {
        order.push_back(c);
    }
    return relabel(assign, order);
}

ClusterAssignment order_by_size(const ClusterAssignment& assign) {
    const auto groups = assign.members();
    std::vector<int> order(groups.size());
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return groups[static_cast<std::size_t>(a - 1)].size() >
               groups[static_cast<std::size_t>(b - 1)].size();
    });
    return relabel(assign, order);
}

// ---------------------------------------------------------------------------
// Cross tabulation

Categorization categorize(const ClusterAssignment& assign) {
    Categorization out;
    out.name = assign.scheme.empty() ? "clustering" : "clustering " + assign.scheme;
    for (int c = 1; c <= assign.num_clusters(); ++c) {
        const auto idx = static_cast<std::size_t>(c - 1);
        out.categories.push_back(idx < assign.cluster_names.size() ? assign.cluster_names[idx]
                                                                   : std::to_string(c));
    }
    if (!assign.idiosyncratic.empty()) {
        out.categories.emplace_back(kIdiosyncratic);
    }
    if (!assign.null_excluded.empty()) {
        out.categories.emplace_back(kNull);
    }
    for (const auto& [id, c] : assign.labels) {
        out.of[id] = out.categories[static_cast<std::size_t>(c - 1)];
    }
    for (const auto& id : assign.idiosyncratic) {
        out.of[id] = std::string(kIdiosyncratic);
    }
    for (const auto& id : assign.null_excluded) {
        out.of[id] = std::string(kNull);
    }
    return out;
}

Categorization categorize_zones(const TemperaturePanel& panel) {
    Categorization out;
    out.name = "zone";
    bool unknown = false;
    for (Zone z : kAllZones) {
        out.categories.emplace_back(zone_name(z));
    }
    for (const auto& c : panel.countries()) {
        if (c.zone) {
            out.of[c.id] = std::string(zone_name(*c.zone));
        } else {
            out.of[c.id] = "unknown";
            unknown = true;
        }
    }
    if (unknown) {
        out.categories.emplace_back("unknown");
    }
    return out;
}

std::vector<int> ContingencyTable::row_totals() const {
    std::vector<int> out;
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
        out.push_back(counts.row(r).sum());
    }
    return out;
}

std::vector<int> ContingencyTable::col_totals() const {
    std::vector<int> out;
    for (Eigen::Index c = 0; c < counts.cols(); ++c) {
        out.push_back(counts.col(c).sum());
    }
    return out;
}

ContingencyTable cross_tab(const Categorization& rows, const Categorization& cols,
                           const TemperaturePanel& panel) {
    auto position = [](const std::vector<std::string>& cats, const std::string& cat) {
        auto it = std::find(cats.begin(), cats.end(), cat);
        if (it == cats.end()) {
            throw ValidationError("category '" + cat + "' not declared");
        }
        return static_cast<Eigen::Index>(it - cats.begin());
    };
    ContingencyTable t;
    t.row_name = rows.name;
    t.col_name = cols.name;
    t.rows = rows.categories;
    t.cols = cols.categories;
    t.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(t.rows.size()),
                                     static_cast<Eigen::Index>(t.cols.size()));
    if (rows.of.size() != panel.num_countries() || cols.of.size() != panel.num_countries()) {
        throw ValidationError("cross tabulation inputs do not cover the same panel");
    }
    for (const auto& id : panel.ids()) {
        auto r = rows.of.find(id);
        auto c = cols.of.find(id);
        if (r == rows.of.end() || c == cols.of.end()) {
            throw ValidationError("country " + id + " missing from a cross tabulation input");
        }
        t.counts(position(t.rows, r->second), position(t.cols, c->second)) += 1;
    }
    return t;
}

ContingencyTable cross_tab(const ClusterAssignment& rows, const ClusterAssignment& cols,
                           const TemperaturePanel& panel) {
    for (const auto& id : panel.ids()) {
        if (!rows.covers(id) || !cols.covers(id)) {
            throw ValidationError("assignments do not cover the same panel (missing " + id + ")");
        }
    }
    return cross_tab(categorize(rows), categorize(cols), panel);
}

// ---------------------------------------------------------------------------
// Summaries

ClusterSummary cluster_summary(const ClusterAssignment& assign,
                               const std::map<std::string, std::vector<double>>& features) {
    ClusterSummary out;
    const auto groups = assign.members();
    for (std::size_t c = 0; c < groups.size(); ++c) {
        ClusterStats s;
        s.cluster = static_cast<int>(c) + 1;
        s.members = groups[c].size();
        double sum = 0.0;
        for (const auto& id : groups[c]) {
            auto it = features.find(id);
            if (it == features.end()) {
                throw ValidationError("no feature values for " + id);
            }
            for (double v : it->second) {
                sum += v;
            }
            s.n_values += it->second.size();
        }
        if (s.n_values == 0) {
            throw ValidationError("cluster " + std::to_string(s.cluster) + " has no feature values");
        }
        s.mean = sum / static_cast<double>(s.n_values);
        double ss = 0.0;
        for (const auto& id : groups[c]) {
            for (double v : features.at(id)) {
                ss += (v - s.mean) * (v - s.mean);
            }
        }
        if (s.n_values > 1) {
            s.sd = std::sqrt(ss / static_cast<double>(s.n_values - 1));
        } else {
            s.sd = 0.0;
            s.sd_defined = false;
        }
        out.clusters.push_back(s);
    }
    return out;
}

ClusterSummary cluster_summary(const ClusterAssignment& assign,
                               const std::map<std::string, double>& features) {
    std::map<std::string, std::vector<double>> wrapped;
    for (const auto& [id, v] : features) {
        wrapped[id] = {v};
    }
    return cluster_summary(assign, wrapped);
}

// ---------------------------------------------------------------------------
// Export

void write_dendrogram_json(std::ostream& out, const Dendrogram& dendro) {
    nlohmann::json j;
    j["labels"] = dendro.labels;
    j["linkage"] = "average";
    auto merges = nlohmann::json::array();
    for (const auto& m : dendro.merges) {
        merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
    }
    j["merges"] = std::move(merges);
    out << j.dump(2) << '\n';
}

void write_assignment_json(std::ostream& out, const ClusterAssignment& assign) {
    nlohmann::json j;
    j["scheme"] = assign.scheme;
    j["cut"] = {{"rule", assign.cut}, {"partitions", assign.partitions}, {"height", assign.cut_height}};
    j["labels"] = assign.labels;
    j["idiosyncratic"] = assign.idiosyncratic;
    j["null_excluded"] = assign.null_excluded;
    j["num_clusters"] = assign.num_clusters();
    if (!assign.cluster_names.empty()) {
        j["cluster_names"] = assign.cluster_names;
    }
    out << j.dump(2) << '\n';
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& assign,
                          const TemperaturePanel& panel) {
    out << "country,name,zone,cluster,category\n";
    for (const auto& c : panel.countries()) {
        const auto label = assign.label_of(c.id);
        csv::write_row(out, {c.id, c.name, c.zone ? std::string(zone_name(*c.zone)) : "",
                             label ? std::to_string(*label) : "", assign.category_of(c.id)});
    }
}

void write_contingency_csv(std::ostream& out, const ContingencyTable& table) {
    std::vector<std::string> header{table.row_name};
    header.insert(header.end(), table.cols.begin(), table.cols.end());
    header.emplace_back("total");
    csv::write_row(out, header);
    const auto row_totals = table.row_totals();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::vector<std::string> row{table.rows[r]};
        for (std::size_t c = 0; c < table.cols.size(); ++c) {
            row.push_back(std::to_string(
                table.counts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
        }
        row.push_back(std::to_string(row_totals[r]));
        csv::write_row(out, row);
    }
    std::vector<std::string> totals{"total"};
    for (int v : table.col_totals()) {
        totals.push_back(std::to_string(v));
    }
    totals.push_back(std::to_string(table.total()));
    csv::write_row(out, totals);
}

void write_summary_csv(std::ostream& out, const ClusterSummary& summary,
                       const ClusterAssignment& assign) {
    out << "cluster,name,members,n_values,mean,sd,sd_convention,sd_defined\n";
    for (const auto& s : summary.clusters) {
        const auto idx = static_cast<std::size_t>(s.cluster - 1);
        csv::write_row(out, {std::to_string(s.cluster),
                             idx < assign.cluster_names.size() ? assign.cluster_names[idx] : "",
                             std::to_string(s.members), std::to_string(s.n_values),
                             csv::format_double(s.mean), csv::format_double(s.sd),
                             summary.sd_convention, s.sd_defined ? "true" : "false"});
    }
}

}  // namespace tempstar
