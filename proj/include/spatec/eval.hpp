#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spatec/dataset.hpp"
#include "spatec/regress.hpp"
#include "spatec/spatial.hpp"

namespace spatec {

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Per-row Bernoulli(train_frac) assignment from a seeded uniform stream;
// exact = true draws a fixed-size train set of round(n * train_frac) instead.
SplitResult split_train_test(std::size_t n, double train_frac, std::uint64_t seed,
                             bool exact = false);

struct EvalReport {
    std::size_t n_train = 0;  // filled by the caller; evaluation sees test rows only
    std::size_t n_test = 0;
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> r2_corr;  // squared correlation of actual and predicted
    std::optional<double> r2_ss;    // 1 - SSR/SST
    std::optional<std::string> r2_note;
    double resid_mean = 0.0;
    double resid_sd = 0.0;
    double resid_skew = 0.0;
};

EvalReport evaluate_predictions(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

struct MarketDGP {
    std::size_t n = 620;
    double beta0 = 7.0;
    double b_lnsqft = 1.0;
    double b_beds = -0.04;
    double b_baths = 0.10;
    double b_lndist = 0.08;
    double b_stories = -0.12;
    double b_single_family = 0.15;
    double lambda = 0.0;             // spatial lag, |lambda| < 1
    double endogeneity = 0.0;        // corr of the lnsqft disturbance with the price error
    double instrument_strength = 0.35;  // parking -> lnsqft first-stage slope
    double noise_sd = 0.35;
    std::uint64_t seed = 1;
};

// Reference point the generator measures dist_pch against.
inline constexpr double kSimRefLat = 33.4661;
inline constexpr double kSimRefLon = -117.7026;

// Synthetic coastal-strip market. Output passes full schema validation and is
// bit-identical for identical inputs. When lambda != 0, lnprice solves
// (I - lambda*W) lnprice = X*beta + u with W rebuilt from the coordinates
// exactly as sim_weights does.
PropertyDataset simulate_market(const MarketDGP& dgp);

// The weight matrix the generator used: row-standardized inverse distance with
// the 2nd-percentile pairwise distance as cutoff (about a dozen neighbors per
// property at n = 620).
SpatialWeightMatrix sim_weights(const PropertyDataset& ds);

struct MonteCarloSummary {
    int reps = 0;
    int failures = 0;
    std::map<std::string, double> mean_estimate;
    std::map<std::string, double> mean_bias;       // mean(estimate - truth)
    std::map<std::string, double> mc_se;           // sd(estimate)/sqrt(successful reps)
    std::map<std::string, double> coverage95;      // fraction of CIs containing the truth
    std::map<std::string, double> rejection_rate;  // fraction with p < 0.05 for H0: coef = 0
};

// Runs the estimator on `reps` independent draws (seed = dgp.seed + index) and
// aggregates over the coefficients named in `truth`. Estimator failures are
// counted, not fatal.
MonteCarloSummary monte_carlo(const MarketDGP& dgp,
                              const std::function<FitResult(const PropertyDataset&)>& estimator,
                              int reps, const std::map<std::string, double>& truth);

}  // namespace spatec
