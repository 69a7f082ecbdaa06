#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "spatec/regress.hpp"

namespace spatec {

enum class Link { logit, probit };

struct BinaryFit {
    Link link = Link::logit;
    std::vector<Coefficient> coefficients;  // stat is a z statistic
    Eigen::MatrixXd vcov;                   // inverse observed information
    double loglik = 0.0;
    double loglik_null = 0.0;
    double pseudo_r2 = 0.0;
    long n = 0;
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXd fitted_prob;
    std::vector<std::size_t> rows_used;
    std::vector<std::string> names;  // X column order, "_cons" last when present
    Eigen::VectorXd beta;
    bool has_intercept = true;
    Eigen::RowVectorXd x_means;  // column means of the design, for marginal effects
};

// Log-likelihood of a binary model; optionally fills the gradient and the
// observed Hessian at beta.
double binary_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta, Link link, Eigen::VectorXd* grad = nullptr,
                     Eigen::MatrixXd* hess = nullptr);

// Newton-Raphson MLE with step halving. Converged when the gradient max-norm
// drops to 1e-8; diverging coefficients raise a separation error.
BinaryFit fit_binary(const PropertyDataset& ds, const ModelSpec& spec, Link link);

struct MarginalEffect {
    std::string name;
    double dydx = 0.0;
};

// dP/dx_j = f(x'beta) * beta_j evaluated at the supplied covariate vector
// (defaults to column means when `at` is empty). The intercept is skipped.
std::vector<MarginalEffect> marginal_effects(const BinaryFit& fit,
                                             const Eigen::RowVectorXd& at = {});

struct LrResult {
    double chi2 = 0.0;
    long df = 0;
    double p = 1.0;
};

LrResult lr_test(const BinaryFit& unrestricted, const BinaryFit& restricted);

struct ConfusionTable {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
    double threshold = 0.5;
};

struct ClassificationMetrics {
    ConfusionTable table;
    // denominator-zero entries stay unset rather than reporting 0
    std::optional<double> sensitivity;         // Pr(+ | D)
    std::optional<double> specificity;         // Pr(- | ~D)
    std::optional<double> ppv;                 // Pr(D | +)
    std::optional<double> npv;                 // Pr(~D | -)
    std::optional<double> false_pos_true_neg;  // Pr(+ | ~D)
    std::optional<double> false_neg_true_pos;  // Pr(- | D)
    std::optional<double> false_pos_classified;  // Pr(~D | +)
    std::optional<double> false_neg_classified;  // Pr(D | -)
    std::optional<double> accuracy;
};

ClassificationMetrics metrics_from_table(const ConfusionTable& t);

ClassificationMetrics classification_table(const Eigen::VectorXd& probs,
                                           const Eigen::VectorXd& actual, double threshold = 0.5);

}  // namespace spatec
