#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "spatec/dataset.hpp"
#include "spatec/error.hpp"

namespace spatec {

enum class VceKind { classical, robust_hc1, cluster };

struct Vce {
    VceKind kind = VceKind::classical;
    std::string cluster_column;  // used when kind == cluster
};

struct ModelSpec {
    std::string response;
    std::vector<std::string> regressors;
    bool intercept = true;
    std::optional<std::string> absorb;
    Vce vce;
};

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    double stat = 0.0;  // t or z
    double p = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct FitResult {
    std::vector<Coefficient> coefficients;
    Eigen::MatrixXd vcov;
    long n = 0;
    long df_resid = 0;
    long df_model = 0;
    long df_absorbed = 0;
    std::optional<double> r2;
    double rmse = 0.0;  // sqrt(SSR / df_resid)
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    Eigen::VectorXd residuals;
    Eigen::VectorXd fitted;
    std::vector<std::size_t> rows_used;  // dataset row indices after listwise deletion
    std::string stat_label = "t";        // "t" or "z"
    double stat_df = 0.0;                // reference df when stat_label == "t"

    // estimator-specific extensions
    std::optional<double> lambda;  // spatial lag coefficient
    bool lambda_warning = false;   // set when |lambda| >= 1
    std::optional<double> pseudo_r2;
    std::optional<std::string> weights_digest;
    std::optional<double> theta;  // random effects quasi-demeaning factor (median over units)
    std::optional<double> theta_min;
    std::optional<double> theta_max;
    std::optional<double> sigma_u;
    std::optional<double> sigma_e;
    bool sigma_u_clipped = false;
    std::vector<std::string> dropped;  // regressors removed before fitting (panel FE)
};

// Listwise-complete design matrix. extra_complete columns participate in the
// missing-row filter without entering X.
struct Design {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> names;  // one per X column
    std::vector<std::size_t> rows;
};

Design build_design(const PropertyDataset& ds, const std::string& response,
                    const std::vector<std::string>& regressors, bool intercept,
                    const std::vector<std::string>& extra_complete = {});

struct LinearOptions {
    bool intercept = true;  // an intercept (or absorption) is part of the model
    long df_absorbed = 0;
    std::optional<double> sst;  // total SS override for r2 (absorbed fits pass the raw SST)
    VceKind vce = VceKind::classical;
    const std::vector<int>* cluster = nullptr;  // labels when vce == cluster
};

// QR-based least squares with rank checking, fit statistics, and the requested
// covariance estimator. X already contains any intercept column.
FitResult fit_linear(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                     const std::vector<std::string>& names, const LinearOptions& opt);

FitResult fit_ols(const PropertyDataset& ds, const ModelSpec& spec);

struct AbsorbResult {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    long df_absorbed = 0;        // number of groups
    std::vector<int> group_index;  // 0-based group per row
};

// Demeans y and the columns of X within groups defined by the labels.
AbsorbResult absorb_transform(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                              const std::vector<int>& groups);

// Sandwich estimator with the small-sample factor G/(G-1) * (N-1)/(N-k_total).
Eigen::MatrixXd cluster_robust_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid,
                                    const std::vector<int>& cluster, long k_total);

struct FracPolyResult {
    std::vector<double> powers;  // 1 or 2 entries
    double deviance = 0.0;
    FitResult fit;
    std::vector<std::pair<std::vector<double>, double>> searched;  // every candidate's deviance
};

// Degree <= 2 fractional polynomial search over {-2,-1,-0.5,0,0.5,1,2,3};
// power 0 is ln X, a repeated power p adds X^p * ln X. 44 candidates total.
FracPolyResult fracpoly_search(const PropertyDataset& ds, const std::string& response,
                               const std::string& focus,
                               const std::vector<std::string>& covariates, double scale);

// Linear prediction for the given rows: each coefficient times its named
// column, "_cons" contributing the estimate itself. Absorbed fits cannot be
// used here (the group effects are not part of the coefficient vector).
Eigen::VectorXd predict(const PropertyDataset& ds, const std::vector<std::size_t>& rows,
                        const FitResult& fit);

}  // namespace spatec
