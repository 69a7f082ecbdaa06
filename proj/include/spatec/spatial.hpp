#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spatec/error.hpp"

namespace spatec {

enum class DistanceMetric { degree_euclidean, haversine_km };

struct Point {
    double latitude = 0.0;
    double longitude = 0.0;
};

// degree_euclidean: sqrt(dlat^2 + dlon^2) in degrees. haversine_km: great-circle km.
double point_distance(const Point& p, const Point& ref, DistanceMetric metric);

std::vector<double> distances_to_reference(const std::vector<double>& latitude,
                                           const std::vector<double>& longitude, const Point& ref,
                                           DistanceMetric metric);

struct ClusterAssignment {
    std::vector<int> labels;    // 1..k
    int k = 0;
    Eigen::MatrixXd centroids;  // k x d, empty for dendrogram cuts
    double within_ss = 0.0;
    std::vector<double> wss_trace;  // per Lloyd iteration, non-increasing
};

// coords: one row per observation. Farthest-point seeding from the given seed,
// then Lloyd iterations until assignments stabilize.
ClusterAssignment kmeans(const Eigen::MatrixXd& coords, int k, std::uint64_t seed);

enum class Linkage { ward, complete };

struct Merge {
    int left = 0;   // node ids: leaves 0..n-1, merge t creates node n+t
    int right = 0;
    double height = 0.0;
    int size = 0;
};

struct Dendrogram {
    std::vector<Merge> merges;  // exactly n-1, heights non-decreasing
    std::size_t n_leaves = 0;
};

Dendrogram hclust(const Eigen::MatrixXd& coords, Linkage linkage);

// Undoes the last (groups-1) merges; labels in first-appearance leaf order.
ClusterAssignment cut_dendrogram(const Dendrogram& d, int groups);

struct SpatialWeightMatrix {
    Eigen::MatrixXd w;
    bool row_standardized = false;
    std::vector<int> isolated;  // rows with no neighbor under the cutoff
    std::string digest;         // 64-bit FNV-1a over the entries, hex
};

// w_ij = 1/d_ij when 0 < d_ij <= cutoff, else 0; optional row standardization.
// Coincident points make 1/d undefined and raise an error listing the pairs.
SpatialWeightMatrix build_weights(const Eigen::MatrixXd& coords, double cutoff, bool standardize);

double median_pairwise_distance(const Eigen::MatrixXd& coords);

struct AnovaResult {
    double ss_between = 0.0;
    double ss_within = 0.0;
    long df_between = 0;
    long df_within = 0;
    double f = 0.0;
    double p_f = 1.0;
    std::optional<double> bartlett_chi2;
    std::optional<long> bartlett_df;
    std::optional<double> p_bartlett;
    std::optional<std::string> bartlett_note;  // set when Bartlett is undefined
};

AnovaResult oneway_anova_bartlett(const std::vector<double>& values,
                                  const std::vector<int>& labels);

// F and its p-value straight from the sums of squares.
AnovaResult anova_f_from_sums(double ss_between, long df_between, double ss_within,
                              long df_within);

}  // namespace spatec
