#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spatec/dataset.hpp"
#include "spatec/spatial.hpp"

namespace spatec {

// Everything run_pipeline needs, read from a sectioned key = value file.
// Defaults mirror the reference study: log-price hedonic controls, square
// footage instrumented by parking, k = 3 geographic clusters.
struct PipelineConfig {
    std::string input;
    ColumnMap columns;

    double ref_lat = 0.0;  // coastal highway reference point for dist_pch
    double ref_lon = 0.0;
    bool ref_lat_set = false;
    bool ref_lon_set = false;
    DistanceMetric metric = DistanceMetric::degree_euclidean;
    int k = 3;
    Linkage linkage = Linkage::ward;
    std::optional<double> cutoff;  // weights cutoff; median pairwise when unset

    std::optional<double> price_threshold;  // pricedummy cutoff; mean price when unset
    std::string response = "lnprice";
    std::vector<std::string> regressors = {"lnsqft",  "beds",          "baths",   "lndist_pch",
                                           "stories", "single_family", "i.month", "i.year"};
    std::string endogenous = "lnsqft";
    std::string instrument = "parking";
    std::vector<std::string> binary_regressors = {"sqft",       "beds",          "baths",
                                                  "stories",    "single_family", "dist_pch",
                                                  "std_clust2", "apr",           "jun",
                                                  "yr2024"};

    double train_frac = 0.8;
    std::uint64_t seed = 0;
    bool seed_set = false;

    std::string output_dir;  // resolved by parse_config: [output] dir, then $SPATEC_OUT

    std::vector<std::string> parse_problems;  // malformed values, unknown keys
};

// Sections [data] [columns] [spatial] [model] [eval] [output]; '#' or ';'
// lines are comments. Unreadable file throws; everything else lands in
// parse_problems so validation can report the full list at once.
PipelineConfig parse_config(const std::string& path);

// Every problem with the config, not only the first. Empty means runnable.
std::vector<std::string> validate_config(const PipelineConfig& config);

// Runs the whole sequence (load, transform, describe, correlation, cluster,
// anova, OLS, absorbed OLS, weights, 2SLS, weak-IV, spatial lag, logit,
// classification, LR test, probit, FE, RE, Hausman, holdout evaluation) and
// writes one JSON plus one text artifact per stage into output_dir. A rerun
// with the same config and input is byte identical.
void run_pipeline(const PipelineConfig& config);

}  // namespace spatec
