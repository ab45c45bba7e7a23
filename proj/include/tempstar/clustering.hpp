#pragma once

#include "tempstar/distances.hpp"
#include "tempstar/panel_io.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tempstar {

/// One agglomeration step. Leaves are nodes 0..K-1; merge m creates node K+m.
/// `left` is the side holding the smaller leaf index.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::vector<std::string> labels;
    std::vector<Merge> merges;

    std::size_t num_leaves() const { return labels.size(); }
};

/// Average linkage (UPGMA) over a full dissimilarity matrix.
///
/// Cluster-to-cluster dissimilarity is kept as the sum of leaf-to-leaf distances, so the
/// height of a merge is that sum over |A||B|. For integer-valued inputs (Hamming) this keeps
/// ties exact. Among pairs at the minimal height the pair with the lexicographically smallest
/// (smaller, larger) minimal-leaf indices merges first.
Dendrogram agglomerate(const DistanceMatrix& dist);

struct CutRule {
    enum class Kind {
        Partitions,  // exactly k groups, singletons included
        Clusters,    // fewest groups giving k groups of at least min_size leaves
        Height,      // apply every merge at or below the height
        AutoGap,     // largest ratio of consecutive heights over the last ceil(K/3) merges
    };
    Kind kind = Kind::Partitions;
    std::size_t k = 1;
    double height = 0.0;
    std::size_t min_size = 2;

    static CutRule partitions(std::size_t k) { return {Kind::Partitions, k, 0.0, 2}; }
    static CutRule clusters(std::size_t k) { return {Kind::Clusters, k, 0.0, 2}; }
    static CutRule at_height(double h) { return {Kind::Height, 0, h, 2}; }
    static CutRule auto_gap() { return {Kind::AutoGap, 0, 0.0, 2}; }

    std::string describe() const;
};

struct ClusterAssignment {
    std::string scheme;
    std::map<std::string, int> labels;  // id -> 1..k
    std::set<std::string> idiosyncratic;
    std::set<std::string> null_excluded;
    std::string cut;                // rule used
    std::size_t partitions = 0;     // groups at the cut, singletons included
    double cut_height = 0.0;        // height of the last applied merge
    std::vector<std::string> cluster_names;  // optional display names, index k-1

    int num_clusters() const;
    std::optional<int> label_of(const std::string& id) const;
    std::vector<std::vector<std::string>> members() const;  // index k-1 -> sorted ids
    bool covers(const std::string& id) const;
    std::string category_of(const std::string& id) const;
};

ClusterAssignment cut(const Dendrogram& dendro, const CutRule& rule);

// Renumbers clusters so that `order[r]` (an old index) becomes r+1.
ClusterAssignment relabel(const ClusterAssignment& assign, const std::vector<int>& order);
// Renumbers clusters by decreasing (or increasing) mean score of their members.
ClusterAssignment order_by_mean(const ClusterAssignment& assign,
                                const std::map<std::string, double>& score, bool descending);
// Renumbers clusters by decreasing size; ties keep the current order.
ClusterAssignment order_by_size(const ClusterAssignment& assign);

/// Category table used for cross-tabulation: every id maps to one of `categories`.
struct Categorization {
    std::string name;
    std::vector<std::string> categories;
    std::map<std::string, std::string> of;
};

// Clusters (named or "1".."k") followed by "idiosyncratic" and "null" when nonempty.
Categorization categorize(const ClusterAssignment& assign);
// Zones in the fixed zone order; countries without a zone fall under "unknown".
Categorization categorize_zones(const TemperaturePanel& panel);

struct ContingencyTable {
    std::string row_name;
    std::string col_name;
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    Eigen::MatrixXi counts;

    std::vector<int> row_totals() const;
    std::vector<int> col_totals() const;
    int total() const { return counts.sum(); }
};

// Both categorizations must cover every panel id.
ContingencyTable cross_tab(const Categorization& rows, const Categorization& cols,
                           const TemperaturePanel& panel);
ContingencyTable cross_tab(const ClusterAssignment& rows, const ClusterAssignment& cols,
                           const TemperaturePanel& panel);

struct ClusterStats {
    int cluster = 0;
    std::size_t members = 0;
    std::size_t n_values = 0;
    double mean = 0.0;
    double sd = 0.0;
    bool sd_defined = true;  // false when only one value: sd reported as 0
};

struct ClusterSummary {
    std::string sd_convention = "sample (n-1)";
    std::vector<ClusterStats> clusters;
};

// Pools every feature value of every member of a cluster.
ClusterSummary cluster_summary(const ClusterAssignment& assign,
                               const std::map<std::string, std::vector<double>>& features);
ClusterSummary cluster_summary(const ClusterAssignment& assign,
                               const std::map<std::string, double>& features);

void write_dendrogram_json(std::ostream& out, const Dendrogram& dendro);
void write_assignment_json(std::ostream& out, const ClusterAssignment& assign);
void write_assignment_csv(std::ostream& out, const ClusterAssignment& assign,
                          const TemperaturePanel& panel);
void write_contingency_csv(std::ostream& out, const ContingencyTable& table);
void write_summary_csv(std::ostream& out, const ClusterSummary& summary,
                       const ClusterAssignment& assign);

}  // namespace tempstar
