#include "spatec/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "spatec/distributions.hpp"

namespace spatec {

namespace {

constexpr double kGradTol = 1e-8;
constexpr int kMaxIter = 100;
constexpr int kMaxHalvings = 30;
constexpr double kSeparationBound = 30.0;
constexpr double kZ975 = 1.959963984540054;

// log(1 + e^eta) without overflow
double softplus(double eta) {
    if (eta > 35.0) return eta;
    if (eta < -35.0) return std::exp(eta);
    return std::log1p(std::exp(eta));
}

double logistic(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    double e = std::exp(eta);
    return e / (1.0 + e);
}

constexpr double kLogSqrt2Pi = 0.9189385332046727;

double normal_log_pdf(double eta) { return -0.5 * eta * eta - kLogSqrt2Pi; }

// ln Phi with an asymptotic fallback deep in the lower tail
double normal_log_cdf(double eta) {
    double c = normal_cdf(eta);
    if (c > 0.0) return std::log(c);
    return normal_log_pdf(eta) - std::log(-eta);
}

}  // namespace

double binary_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta, Link link, Eigen::VectorXd* grad,
                     Eigen::MatrixXd* hess) {
    const long n = y.size();
    Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    Eigen::VectorXd score(n);   // d ll_i / d eta_i
    Eigen::VectorXd weight(n);  // -d^2 ll_i / d eta_i^2
    for (long i = 0; i < n; ++i) {
        double e = eta(i);
        if (link == Link::logit) {
            ll += y(i) * e - softplus(e);
            double p = logistic(e);
            score(i) = y(i) - p;
            weight(i) = p * (1.0 - p);
        } else {
            if (y(i) > 0.5) {
                ll += normal_log_cdf(e);
                double lam = std::exp(normal_log_pdf(e) - normal_log_cdf(e));
                score(i) = lam;
                weight(i) = lam * (lam + e);
            } else {
                ll += normal_log_cdf(-e);
                double lam = std::exp(normal_log_pdf(e) - normal_log_cdf(-e));
                score(i) = -lam;
                weight(i) = lam * (lam - e);
            }
        }
    }
    if (grad != nullptr) *grad = X.transpose() * score;
    if (hess != nullptr)
        *hess = -(X.transpose() * weight.asDiagonal() * X);
    return ll;
}

BinaryFit fit_binary(const PropertyDataset& ds, const ModelSpec& spec, Link link) {
    for (const auto& r : spec.regressors)
        if (r == spec.response) throw SpecError("response '" + r + "' appears among regressors");
    if (spec.absorb) throw SpecError("absorption is not supported for binary models");

    std::vector<std::string> extras;
    if (spec.vce.kind == VceKind::cluster) extras.push_back(spec.vce.cluster_column);
    Design d = build_design(ds, spec.response, spec.regressors, spec.intercept, extras);

    const long n = d.y.size();
    const long p = d.X.cols();
    long ones = 0;
    for (long i = 0; i < n; ++i) {
        if (d.y(i) != 0.0 && d.y(i) != 1.0)
            throw DomainError("response '" + spec.response + "' is not binary at used row " +
                              std::to_string(d.rows[static_cast<std::size_t>(i)] + 1));
        if (d.y(i) == 1.0) ++ones;
    }
    if (ones == 0 || ones == n)
        throw EstimationError("response '" + spec.response + "' takes a single value");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd grad(p);
    Eigen::MatrixXd hess(p, p);
    double ll = binary_loglik(d.X, d.y, beta, link, &grad, &hess);

    int iter = 0;
    bool converged = grad.lpNorm<Eigen::Infinity>() <= kGradTol;
    while (!converged && iter < kMaxIter) {
        ++iter;
        double old_ll = ll;
        Eigen::VectorXd step = (-hess).ldlt().solve(grad);
        double scale = 1.0;
        double new_ll = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd cand;
        for (int h = 0; h <= kMaxHalvings; ++h) {
            cand = beta + scale * step;
            new_ll = binary_loglik(d.X, d.y, cand, link, nullptr, nullptr);
            if (new_ll >= old_ll - 1e-12) break;
            scale *= 0.5;
        }
        if (new_ll < old_ll - 1e-6)
            throw EstimationError("log-likelihood decreased; optimization failed");
        beta = cand;
        ll = binary_loglik(d.X, d.y, beta, link, &grad, &hess);
        if (grad.lpNorm<Eigen::Infinity>() <= kGradTol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        // a coefficient past the bound with the gradient still pushing it
        // outward cannot settle; that is separation, not slow convergence
        for (long j = 0; j < p; ++j)
            if (std::abs(beta(j)) > kSeparationBound &&
                grad(j) * (beta(j) > 0.0 ? 1.0 : -1.0) > kGradTol)
                throw EstimationError("separation detected: coefficient on '" +
                                      d.names[static_cast<std::size_t>(j)] + "' diverged");
        throw EstimationError("no convergence after " + std::to_string(kMaxIter) +
                              " iterations; last loglik " + std::to_string(ll));
    }

    BinaryFit fit;
    fit.link = link;
    fit.n = n;
    fit.iterations = iter;
    fit.converged = true;
    fit.loglik = ll;
    double pbar = static_cast<double>(ones) / static_cast<double>(n);
    fit.loglik_null = static_cast<double>(n) *
                      (pbar * std::log(pbar) + (1.0 - pbar) * std::log(1.0 - pbar));
    fit.pseudo_r2 = 1.0 - ll / fit.loglik_null;
    if (std::abs(fit.pseudo_r2) < 1e-15) fit.pseudo_r2 = 0.0;
    fit.beta = beta;
    fit.names = d.names;
    fit.rows_used = d.rows;
    fit.has_intercept = spec.intercept;
    fit.x_means = d.X.colwise().mean();

    fit.vcov = (-hess).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    fit.vcov = 0.5 * (fit.vcov + fit.vcov.transpose()).eval();

    fit.fitted_prob.resize(n);
    Eigen::VectorXd eta = d.X * beta;
    for (long i = 0; i < n; ++i)
        fit.fitted_prob(i) = link == Link::logit ? logistic(eta(i)) : normal_cdf(eta(i));

    for (long j = 0; j < p; ++j) {
        Coefficient c;
        c.name = d.names[static_cast<std::size_t>(j)];
        c.estimate = beta(j);
        c.se = std::sqrt(std::max(0.0, fit.vcov(j, j)));
        if (c.se > 0.0) {
            c.stat = c.estimate / c.se;
            c.p = 2.0 * normal_sf(std::abs(c.stat));
            c.ci_low = c.estimate - kZ975 * c.se;
            c.ci_high = c.estimate + kZ975 * c.se;
        } else {
            c.stat = 0.0;
            c.p = 1.0;
            c.ci_low = c.ci_high = c.estimate;
        }
        fit.coefficients.push_back(c);
    }
    return fit;
}

std::vector<MarginalEffect> marginal_effects(const BinaryFit& fit, const Eigen::RowVectorXd& at) {
    if (!fit.converged) throw EstimationError("marginal effects need a converged fit");
    Eigen::RowVectorXd x = at.size() > 0 ? at : fit.x_means;
    if (x.size() != fit.beta.size())
        throw DomainError("covariate vector length " + std::to_string(x.size()) +
                          " does not match " + std::to_string(fit.beta.size()) + " coefficients");
    double eta = x * fit.beta;
    double density;
    if (fit.link == Link::logit) {
        double p = logistic(eta);
        density = p * (1.0 - p);
    } else {
        density = normal_pdf(eta);
    }
    std::vector<MarginalEffect> out;
    for (long j = 0; j < fit.beta.size(); ++j) {
        if (fit.names[static_cast<std::size_t>(j)] == "_cons") continue;
        out.push_back({fit.names[static_cast<std::size_t>(j)], density * fit.beta(j)});
    }
    return out;
}

LrResult lr_test(const BinaryFit& unrestricted, const BinaryFit& restricted) {
    if (unrestricted.n != restricted.n)
        throw SpecError("models fit on different numbers of observations");
    if (unrestricted.rows_used != restricted.rows_used)
        throw SpecError("models fit on different rows");
    std::set<std::string> unres(unrestricted.names.begin(), unrestricted.names.end());
    for (const auto& name : restricted.names)
        if (!unres.count(name))
            throw SpecError("models are not nested: '" + name +
                            "' is only in the restricted model");
    if (restricted.names.size() >= unrestricted.names.size())
        throw SpecError("restricted model must have fewer parameters");

    double diff = unrestricted.loglik - restricted.loglik;
    if (diff < -1e-6)
        throw EstimationError("unrestricted log-likelihood is lower; optimization failed");
    LrResult r;
    r.chi2 = std::max(0.0, 2.0 * diff);
    r.df = static_cast<long>(unrestricted.names.size() - restricted.names.size());
    r.p = chi2_sf(r.chi2, static_cast<double>(r.df));
    return r;
}

ClassificationMetrics metrics_from_table(const ConfusionTable& t) {
    ClassificationMetrics m;
    m.table = t;
    auto rate = [](long num, long den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.sensitivity = rate(t.tp, t.tp + t.fn);
    m.specificity = rate(t.tn, t.tn + t.fp);
    m.ppv = rate(t.tp, t.tp + t.fp);
    m.npv = rate(t.tn, t.tn + t.fn);
    m.false_pos_true_neg = rate(t.fp, t.fp + t.tn);
    m.false_neg_true_pos = rate(t.fn, t.fn + t.tp);
    m.false_pos_classified = rate(t.fp, t.tp + t.fp);
    m.false_neg_classified = rate(t.fn, t.tn + t.fn);
    m.accuracy = rate(t.tp + t.tn, t.tp + t.fp + t.fn + t.tn);
    return m;
}

ClassificationMetrics classification_table(const Eigen::VectorXd& probs,
                                           const Eigen::VectorXd& actual, double threshold) {
    if (probs.size() != actual.size()) throw DomainError("probs and actual lengths differ");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw DomainError("threshold must lie strictly between 0 and 1");
    ConfusionTable t;
    t.threshold = threshold;
    for (long i = 0; i < probs.size(); ++i) {
        bool plus = probs(i) >= threshold;
        bool d = actual(i) != 0.0;
        if (plus && d) ++t.tp;
        else if (plus && !d) ++t.fp;
        else if (!plus && d) ++t.fn;
        else ++t.tn;
    }
    return metrics_from_table(t);
}

}  // namespace spatec
