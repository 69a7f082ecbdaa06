#include "spatec/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "spatec/distributions.hpp"

namespace spatec {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kPi = 3.14159265358979323846;

std::vector<int> int_labels(const std::vector<double>& column,
                            const std::vector<std::size_t>& rows, const std::string& name) {
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double v = column[rows[i]];
        if (std::isnan(v))
            throw DomainError("grouping column '" + name + "' has a missing value in used rows");
        labels[i] = static_cast<int>(std::lround(v));
    }
    return labels;
}

long count_groups(const std::vector<int>& labels) {
    return static_cast<long>(std::set<int>(labels.begin(), labels.end()).size());
}

}  // namespace

Design build_design(const PropertyDataset& ds, const std::string& response,
                    const std::vector<std::string>& regressors, bool intercept,
                    const std::vector<std::string>& extra_complete) {
    std::vector<const std::vector<double>*> cols;
    cols.push_back(&ds.column(response));
    for (const auto& r : regressors) cols.push_back(&ds.column(r));
    for (const auto& e : extra_complete) cols.push_back(&ds.column(e));

    Design d;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        bool ok = true;
        for (const auto* c : cols)
            if (std::isnan((*c)[i])) {
                ok = false;
                break;
            }
        if (ok) d.rows.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(d.rows.size());
    const auto p = static_cast<Eigen::Index>(regressors.size()) + (intercept ? 1 : 0);
    d.y.resize(n);
    d.X.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) d.y(i) = ds.column(response)[d.rows[static_cast<std::size_t>(i)]];
    for (std::size_t j = 0; j < regressors.size(); ++j) {
        const auto& c = ds.column(regressors[j]);
        for (Eigen::Index i = 0; i < n; ++i)
            d.X(i, static_cast<Eigen::Index>(j)) = c[d.rows[static_cast<std::size_t>(i)]];
        d.names.push_back(regressors[j]);
    }
    if (intercept) {
        d.X.col(p - 1).setOnes();
        d.names.push_back("_cons");
    }
    return d;
}

FitResult fit_linear(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                     const std::vector<std::string>& names, const LinearOptions& opt) {
    const long n = y.size();
    const long p = X.cols();
    if (p == 0) throw EstimationError("no regressors");
    if (n <= p + opt.df_absorbed)
        throw EstimationError("insufficient observations: n = " + std::to_string(n) +
                              ", parameters = " + std::to_string(p + opt.df_absorbed));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd R = qr.matrixR().topRows(p).template triangularView<Eigen::Upper>();
    double max_diag = std::abs(R(0, 0));
    if (max_diag == 0.0) throw CollinearityError("design matrix is identically zero");
    long rank = 0;
    for (long j = 0; j < p; ++j)
        if (std::abs(R(j, j)) > kRankTol * max_diag) ++rank;
    if (rank < p) {
        std::string msg = "collinear columns:";
        const auto& perm = qr.colsPermutation().indices();
        for (long j = rank; j < p; ++j) msg += " " + names[static_cast<std::size_t>(perm(j))];
        throw CollinearityError(msg);
    }

    Eigen::VectorXd beta = qr.solve(y);
    Eigen::VectorXd fitted = X * beta;
    Eigen::VectorXd resid = y - fitted;
    double ssr = resid.squaredNorm();

    double sst;
    if (opt.sst) {
        sst = *opt.sst;
    } else if (opt.intercept) {
        sst = (y.array() - y.mean()).square().sum();
    } else {
        sst = y.squaredNorm();
    }

    FitResult fit;
    fit.n = n;
    fit.df_absorbed = opt.df_absorbed;
    const long k_params = rank + opt.df_absorbed;
    fit.df_resid = n - k_params;
    fit.df_model = k_params - (opt.intercept ? 1 : 0);
    if (sst > 0.0) fit.r2 = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
    fit.rmse = std::sqrt(ssr / static_cast<double>(fit.df_resid));
    double sigma2_ml = std::max(ssr / static_cast<double>(n), 1e-300);
    fit.loglik = -0.5 * static_cast<double>(n) * (std::log(2.0 * kPi * sigma2_ml) + 1.0);
    fit.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(k_params);
    fit.bic = -2.0 * fit.loglik + static_cast<double>(k_params) * std::log(static_cast<double>(n));
    fit.residuals = resid;
    fit.fitted = fitted;

    // (X'X)^-1 = P R^-1 R^-T P'
    Eigen::MatrixXd rinv =
        R.topLeftCorner(p, p).template triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd xtx_inv = qr.colsPermutation() * (rinv * rinv.transpose()) *
                              qr.colsPermutation().transpose();

    long stat_df = fit.df_resid;
    if (opt.vce == VceKind::classical) {
        fit.vcov = (ssr / static_cast<double>(fit.df_resid)) * xtx_inv;
    } else if (opt.vce == VceKind::robust_hc1) {
        Eigen::MatrixXd meat = X.transpose() * resid.array().square().matrix().asDiagonal() * X;
        double c = static_cast<double>(n) / static_cast<double>(n - k_params);
        fit.vcov = c * xtx_inv * meat * xtx_inv;
    } else {
        if (opt.cluster == nullptr || static_cast<long>(opt.cluster->size()) != n)
            throw DomainError("cluster labels missing or wrong length");
        fit.vcov = cluster_robust_vcov(X, resid, *opt.cluster, k_params);
        stat_df = count_groups(*opt.cluster) - 1;
    }
    fit.vcov = 0.5 * (fit.vcov + fit.vcov.transpose()).eval();
    fit.stat_df = static_cast<double>(stat_df);

    double tcrit = student_t_quantile(0.975, static_cast<double>(stat_df));
    for (long j = 0; j < p; ++j) {
        Coefficient c;
        c.name = names[static_cast<std::size_t>(j)];
        c.estimate = beta(j);
        c.se = std::sqrt(std::max(0.0, fit.vcov(j, j)));
        if (c.se > 0.0) {
            c.stat = c.estimate / c.se;
            c.p = student_t_two_sided_p(c.stat, static_cast<double>(stat_df));
            c.ci_low = c.estimate - tcrit * c.se;
            c.ci_high = c.estimate + tcrit * c.se;
        } else {
            c.stat = c.estimate == 0.0 ? 0.0 : std::copysign(
                std::numeric_limits<double>::infinity(), c.estimate);
            c.p = c.estimate == 0.0 ? 1.0 : 0.0;
            c.ci_low = c.ci_high = c.estimate;
        }
        fit.coefficients.push_back(c);
    }
    return fit;
}

AbsorbResult absorb_transform(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                              const std::vector<int>& groups) {
    if (static_cast<long>(groups.size()) != y.size())
        throw DomainError("absorb: group labels length differs from data");
    std::map<int, int> group_of;
    for (int g : groups)
        if (!group_of.count(g)) {
            int next = static_cast<int>(group_of.size());
            group_of[g] = next;
        }
    const int ng = static_cast<int>(group_of.size());

    AbsorbResult out;
    out.df_absorbed = ng;
    out.group_index.resize(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) out.group_index[i] = group_of[groups[i]];

    Eigen::VectorXd ymean = Eigen::VectorXd::Zero(ng);
    Eigen::MatrixXd xmean = Eigen::MatrixXd::Zero(ng, X.cols());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(ng);
    for (long i = 0; i < y.size(); ++i) {
        int g = out.group_index[static_cast<std::size_t>(i)];
        ymean(g) += y(i);
        xmean.row(g) += X.row(i);
        count(g) += 1.0;
    }
    for (int g = 0; g < ng; ++g) {
        ymean(g) /= count(g);
        xmean.row(g) /= count(g);
    }
    out.y = y;
    out.X = X;
    for (long i = 0; i < y.size(); ++i) {
        int g = out.group_index[static_cast<std::size_t>(i)];
        out.y(i) -= ymean(g);
        out.X.row(i) -= xmean.row(g);
    }
    return out;
}

Eigen::MatrixXd cluster_robust_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid,
                                    const std::vector<int>& cluster, long k_total) {
    const long n = X.rows();
    if (static_cast<long>(cluster.size()) != n)
        throw DomainError("cluster labels length differs from data");
    const long G = count_groups(cluster);
    if (G < 2) throw DomainError("cluster-robust variance needs at least 2 clusters");

    Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(
        Eigen::MatrixXd::Identity(X.cols(), X.cols()));

    std::map<int, Eigen::VectorXd> scores;
    for (long i = 0; i < n; ++i) {
        auto it = scores.find(cluster[static_cast<std::size_t>(i)]);
        if (it == scores.end())
            it = scores.emplace(cluster[static_cast<std::size_t>(i)],
                                Eigen::VectorXd::Zero(X.cols())).first;
        it->second += X.row(i).transpose() * resid(i);
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (const auto& [g, s] : scores) meat += s * s.transpose();

    double c = (static_cast<double>(G) / static_cast<double>(G - 1)) *
               (static_cast<double>(n - 1) / static_cast<double>(n - k_total));
    Eigen::MatrixXd v = c * xtx_inv * meat * xtx_inv;
    return 0.5 * (v + v.transpose());
}

FitResult fit_ols(const PropertyDataset& ds, const ModelSpec& spec) {
    for (const auto& r : spec.regressors)
        if (r == spec.response) throw SpecError("response '" + r + "' appears among regressors");

    std::vector<std::string> extras;
    if (spec.absorb) extras.push_back(*spec.absorb);
    if (spec.vce.kind == VceKind::cluster) extras.push_back(spec.vce.cluster_column);

    const bool intercept_col = spec.intercept && !spec.absorb;
    Design d = build_design(ds, spec.response, spec.regressors, intercept_col, extras);

    LinearOptions opt;
    opt.intercept = spec.intercept || spec.absorb.has_value();
    opt.vce = spec.vce.kind;
    std::vector<int> cluster_labels;
    if (spec.vce.kind == VceKind::cluster) {
        cluster_labels = int_labels(ds.column(spec.vce.cluster_column), d.rows,
                                    spec.vce.cluster_column);
        opt.cluster = &cluster_labels;
    }

    FitResult fit;
    if (spec.absorb) {
        auto labels = int_labels(ds.column(*spec.absorb), d.rows, *spec.absorb);
        AbsorbResult ar = absorb_transform(d.y, d.X, labels);
        opt.df_absorbed = ar.df_absorbed;
        opt.sst = (d.y.array() - d.y.mean()).square().sum();
        fit = fit_linear(ar.y, ar.X, d.names, opt);
        fit.fitted = d.y - fit.residuals;  // adds the group effects back
    } else {
        fit = fit_linear(d.y, d.X, d.names, opt);
    }
    fit.rows_used = d.rows;
    return fit;
}

FracPolyResult fracpoly_search(const PropertyDataset& ds, const std::string& response,
                               const std::string& focus,
                               const std::vector<std::string>& covariates, double scale) {
    if (!(scale > 0.0)) throw DomainError("fracpoly: scale must be positive");
    Design base = build_design(ds, response, covariates, false, {focus});

    const auto n = static_cast<Eigen::Index>(base.rows.size());
    Eigen::VectorXd x(n);
    const auto& focus_col = ds.column(focus);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = focus_col[base.rows[static_cast<std::size_t>(i)]] / scale;
        if (!(v > 0.0))
            throw DomainError("fracpoly: focus column '" + focus +
                              "' must be positive after scaling");
        x(i) = v;
    }
    Eigen::VectorXd lnx = x.array().log();

    static const double kPowers[8] = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};
    std::vector<std::vector<double>> candidates;
    for (double p : kPowers) candidates.push_back({p});
    for (int a = 0; a < 8; ++a)
        for (int b = a + 1; b < 8; ++b) candidates.push_back({kPowers[a], kPowers[b]});
    for (double p : kPowers) candidates.push_back({p, p});

    auto term = [&](double p) -> Eigen::VectorXd {
        if (p == 0.0) return lnx;
        return x.array().pow(p);
    };
    auto term_name = [&](double p) {
        if (p == 0.0) return "ln(" + focus + ")";
        std::string s = std::to_string(p);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return focus + "^" + s;
    };

    FracPolyResult out;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& powers : candidates) {
        const bool repeated = powers.size() == 2 && powers[0] == powers[1];
        const std::size_t nb = powers.size();
        Eigen::MatrixXd X(n, static_cast<Eigen::Index>(nb + covariates.size()) + 1);
        std::vector<std::string> names;
        X.col(0) = term(powers[0]);
        names.push_back(term_name(powers[0]));
        if (nb == 2) {
            if (repeated) {
                X.col(1) = (term(powers[0]).array() * lnx.array()).matrix();
                names.push_back(term_name(powers[0]) + "*ln(" + focus + ")");
            } else {
                X.col(1) = term(powers[1]);
                names.push_back(term_name(powers[1]));
            }
        }
        for (std::size_t j = 0; j < covariates.size(); ++j) {
            X.col(static_cast<Eigen::Index>(nb + j)) = base.X.col(static_cast<Eigen::Index>(j));
            names.push_back(covariates[j]);
        }
        X.col(X.cols() - 1).setOnes();
        names.push_back("_cons");

        LinearOptions opt;
        FitResult fit = fit_linear(base.y, X, names, opt);
        double deviance = -2.0 * fit.loglik;
        out.searched.emplace_back(powers, deviance);
        if (deviance < best) {
            best = deviance;
            out.powers = powers;
            out.deviance = deviance;
            out.fit = std::move(fit);
            out.fit.rows_used = base.rows;
        }
    }
    return out;
}

Eigen::VectorXd predict(const PropertyDataset& ds, const std::vector<std::size_t>& rows,
                        const FitResult& fit) {
    if (fit.df_absorbed > 0)
        throw DomainError("cannot predict from an absorbed fit; the group effects are unknown");
    Eigen::VectorXd yhat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
    for (const auto& c : fit.coefficients) {
        if (c.name == "_cons") {
            yhat.array() += c.estimate;
            continue;
        }
        if (!ds.has_column(c.name))
            throw ColumnError("prediction needs column '" + c.name + "'");
        const auto& col = ds.column(c.name);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] >= ds.n_rows())
                throw DomainError("prediction row " + std::to_string(rows[i]) + " out of range");
            double v = col[rows[i]];
            if (std::isnan(v))
                throw DomainError("prediction row " + std::to_string(rows[i] + 1) +
                                  " has a missing value in '" + c.name + "'");
            yhat(static_cast<Eigen::Index>(i)) += c.estimate * v;
        }
    }
    return yhat;
}

}  // namespace spatec
