#include "spatec/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "spatec/distributions.hpp"

namespace spatec {

namespace {

struct PanelDesign {
    Design d;
    std::vector<int> unit;    // 0-based unit index per row
    long n_units = 0;
    std::vector<long> sizes;  // per unit
};

PanelDesign build_panel(const PropertyDataset& ds, const PanelIndex& index,
                        const ModelSpec& spec, bool intercept_col) {
    std::vector<std::string> extras = {index.unit, index.time};
    if (spec.vce.kind == VceKind::cluster) extras.push_back(spec.vce.cluster_column);
    PanelDesign p;
    p.d = build_design(ds, spec.response, spec.regressors, intercept_col, extras);

    const auto& ucol = ds.column(index.unit);
    const auto& tcol = ds.column(index.time);
    std::map<long, int> unit_of;
    std::set<std::pair<long, long>> seen;
    p.unit.resize(p.d.rows.size());
    for (std::size_t i = 0; i < p.d.rows.size(); ++i) {
        long u = std::lround(ucol[p.d.rows[i]]);
        long t = std::lround(tcol[p.d.rows[i]]);
        if (!seen.insert({u, t}).second)
            throw DomainError("duplicate (" + index.unit + ", " + index.time + ") pair (" +
                              std::to_string(u) + ", " + std::to_string(t) + ")");
        auto it = unit_of.find(u);
        if (it == unit_of.end()) it = unit_of.emplace(u, static_cast<int>(unit_of.size())).first;
        p.unit[i] = it->second;
    }
    p.n_units = static_cast<long>(unit_of.size());
    p.sizes.assign(static_cast<std::size_t>(p.n_units), 0);
    for (int u : p.unit) ++p.sizes[static_cast<std::size_t>(u)];
    return p;
}

std::vector<int> cluster_labels_for(const PropertyDataset& ds, const ModelSpec& spec,
                                    const std::vector<std::size_t>& rows) {
    std::vector<int> labels(rows.size());
    const auto& col = ds.column(spec.vce.cluster_column);
    for (std::size_t i = 0; i < rows.size(); ++i)
        labels[i] = static_cast<int>(std::lround(col[rows[i]]));
    return labels;
}

}  // namespace

FitResult fit_fe(const PropertyDataset& ds, const PanelIndex& index, const ModelSpec& spec) {
    PanelDesign p = build_panel(ds, index, spec, false);
    bool any_repeat = false;
    for (long s : p.sizes)
        if (s > 1) any_repeat = true;
    if (!any_repeat)
        throw EstimationError(
            "degenerate panel: every unit has a single observation, so the within "
            "transform removes all variation");

    AbsorbResult ar = absorb_transform(p.d.y, p.d.X, p.unit);

    // Unit-constant regressors are annihilated by demeaning; report them as
    // dropped instead of failing the rank check.
    std::vector<long> keep;
    std::vector<std::string> kept_names, dropped;
    for (long j = 0; j < ar.X.cols(); ++j) {
        double within = ar.X.col(j).norm();
        double scale = std::max(1.0, p.d.X.col(j).norm());
        if (within <= 1e-10 * scale) {
            dropped.push_back(p.d.names[static_cast<std::size_t>(j)]);
        } else {
            keep.push_back(j);
            kept_names.push_back(p.d.names[static_cast<std::size_t>(j)]);
        }
    }
    if (keep.empty()) throw EstimationError("no regressor varies within units");
    Eigen::MatrixXd Xw(ar.X.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) Xw.col(static_cast<Eigen::Index>(j)) = ar.X.col(keep[j]);

    LinearOptions opt;
    opt.intercept = true;  // the unit means play the intercept's role
    opt.df_absorbed = ar.df_absorbed;
    opt.sst = (ar.y.array() - ar.y.mean()).square().sum();  // within variation
    opt.vce = spec.vce.kind;
    std::vector<int> cl;
    if (spec.vce.kind == VceKind::cluster) {
        cl = cluster_labels_for(ds, spec, p.d.rows);
        opt.cluster = &cl;
    }
    FitResult fit = fit_linear(ar.y, Xw, kept_names, opt);
    fit.fitted = p.d.y - fit.residuals;
    fit.rows_used = p.d.rows;
    fit.dropped = dropped;
    return fit;
}

FitResult fit_re(const PropertyDataset& ds, const PanelIndex& index, const ModelSpec& spec) {
    PanelDesign p = build_panel(ds, index, spec, false);
    const long n = p.d.y.size();
    const long G = p.n_units;
    if (G < 2) throw EstimationError("random effects need at least 2 units");

    // Within step for sigma_e^2.
    AbsorbResult ar = absorb_transform(p.d.y, p.d.X, p.unit);
    std::vector<long> keep;
    for (long j = 0; j < ar.X.cols(); ++j) {
        double scale = std::max(1.0, p.d.X.col(j).norm());
        if (ar.X.col(j).norm() > 1e-10 * scale) keep.push_back(j);
    }
    double sigma_e2;
    long k_within = static_cast<long>(keep.size());
    if (k_within > 0 && n - G - k_within > 0) {
        Eigen::MatrixXd Xw(n, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j)
            Xw.col(static_cast<Eigen::Index>(j)) = ar.X.col(keep[j]);
        Eigen::VectorXd bw = Xw.colPivHouseholderQr().solve(ar.y);
        sigma_e2 = (ar.y - Xw * bw).squaredNorm() / static_cast<double>(n - G - k_within);
    } else {
        // no within variation to exploit; fall back to the within residuals alone
        sigma_e2 = ar.y.squaredNorm() / static_cast<double>(std::max<long>(1, n - G));
    }

    // Between step on unit means for sigma_u^2 (Swamy-Arora).
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(G);
    Eigen::MatrixXd xbar = Eigen::MatrixXd::Zero(G, p.d.X.cols());
    for (long i = 0; i < n; ++i) {
        ybar(p.unit[static_cast<std::size_t>(i)]) += p.d.y(i);
        xbar.row(p.unit[static_cast<std::size_t>(i)]) += p.d.X.row(i);
    }
    for (long g = 0; g < G; ++g) {
        ybar(g) /= static_cast<double>(p.sizes[static_cast<std::size_t>(g)]);
        xbar.row(g) /= static_cast<double>(p.sizes[static_cast<std::size_t>(g)]);
    }
    Eigen::MatrixXd Xb(G, p.d.X.cols() + 1);
    Xb.leftCols(p.d.X.cols()) = xbar;
    Xb.col(p.d.X.cols()).setOnes();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrb(Xb);
    long k_between = 0;
    {
        Eigen::MatrixXd R = qrb.matrixR().topRows(Xb.cols()).template triangularView<Eigen::Upper>();
        double mx = std::abs(R(0, 0));
        for (long j = 0; j < Xb.cols(); ++j)
            if (mx > 0.0 && std::abs(R(j, j)) > 1e-10 * mx) ++k_between;
    }
    if (G <= k_between)
        throw EstimationError("too few units for the between regression (" + std::to_string(G) +
                              " units, " + std::to_string(k_between) + " parameters)");
    Eigen::VectorXd bb = qrb.solve(ybar);
    double ssr_b = (ybar - Xb * bb).squaredNorm();
    double sigma_b2 = ssr_b / static_cast<double>(G - k_between);

    double t_harmonic = 0.0;
    for (long s : p.sizes) t_harmonic += 1.0 / static_cast<double>(s);
    t_harmonic = static_cast<double>(G) / t_harmonic;

    FitResult fit;
    double sigma_u2 = sigma_b2 - sigma_e2 / t_harmonic;
    if (sigma_u2 < 0.0) {
        sigma_u2 = 0.0;
        fit.sigma_u_clipped = true;
    }

    // Quasi-demean and run OLS on the transformed data.
    std::vector<double> theta(static_cast<std::size_t>(G));
    for (long g = 0; g < G; ++g) {
        double Ti = static_cast<double>(p.sizes[static_cast<std::size_t>(g)]);
        theta[static_cast<std::size_t>(g)] =
            1.0 - std::sqrt(sigma_e2 / (sigma_e2 + Ti * sigma_u2));
    }
    Eigen::VectorXd ystar = p.d.y;
    Eigen::MatrixXd Xstar(n, p.d.X.cols() + 1);
    Xstar.leftCols(p.d.X.cols()) = p.d.X;
    Xstar.col(p.d.X.cols()).setOnes();
    std::vector<std::string> names = p.d.names;
    names.push_back("_cons");
    for (long i = 0; i < n; ++i) {
        int g = p.unit[static_cast<std::size_t>(i)];
        double th = theta[static_cast<std::size_t>(g)];
        ystar(i) -= th * ybar(g);
        Xstar.row(i).head(p.d.X.cols()) -= th * xbar.row(g);
        Xstar(i, p.d.X.cols()) -= th;
    }

    LinearOptions opt;
    opt.intercept = true;
    opt.vce = spec.vce.kind;
    std::vector<int> cl;
    if (spec.vce.kind == VceKind::cluster) {
        cl = cluster_labels_for(ds, spec, p.d.rows);
        opt.cluster = &cl;
    }
    FitResult gls = fit_linear(ystar, Xstar, names, opt);
    gls.sigma_u_clipped = fit.sigma_u_clipped;
    gls.sigma_u = std::sqrt(sigma_u2);
    gls.sigma_e = std::sqrt(sigma_e2);
    std::vector<double> sorted_theta = theta;
    std::sort(sorted_theta.begin(), sorted_theta.end());
    gls.theta = sorted_theta[sorted_theta.size() / 2];
    gls.theta_min = sorted_theta.front();
    gls.theta_max = sorted_theta.back();
    gls.rows_used = p.d.rows;

    // Report fit against the original scale as a squared correlation.
    Eigen::VectorXd beta(Xstar.cols());
    for (long j = 0; j < Xstar.cols(); ++j) beta(j) = gls.coefficients[static_cast<std::size_t>(j)].estimate;
    Eigen::MatrixXd Xorig(n, p.d.X.cols() + 1);
    Xorig.leftCols(p.d.X.cols()) = p.d.X;
    Xorig.col(p.d.X.cols()).setOnes();
    Eigen::VectorXd yhat = Xorig * beta;
    Eigen::VectorXd cy = p.d.y.array() - p.d.y.mean();
    Eigen::VectorXd ch = yhat.array() - yhat.mean();
    if (cy.norm() > 0.0 && ch.norm() > 0.0) {
        double r = cy.dot(ch) / (cy.norm() * ch.norm());
        gls.pseudo_r2 = r * r;
    }
    return gls;
}

HausmanResult hausman_test(const FitResult& fe, const FitResult& re) {
    std::map<std::string, long> fe_index, re_index;
    for (std::size_t j = 0; j < fe.coefficients.size(); ++j)
        fe_index[fe.coefficients[j].name] = static_cast<long>(j);
    for (std::size_t j = 0; j < re.coefficients.size(); ++j)
        re_index[re.coefficients[j].name] = static_cast<long>(j);

    std::vector<std::string> common;
    for (const auto& c : fe.coefficients)
        if (c.name != "_cons" && re_index.count(c.name)) common.push_back(c.name);
    if (common.empty()) throw SpecError("no common coefficients to compare");

    const long k = static_cast<long>(common.size());
    Eigen::VectorXd diff(k);
    Eigen::MatrixXd vdiff(k, k);
    for (long a = 0; a < k; ++a) {
        long fa = fe_index[common[static_cast<std::size_t>(a)]];
        long ra = re_index[common[static_cast<std::size_t>(a)]];
        diff(a) = fe.coefficients[static_cast<std::size_t>(fa)].estimate -
                  re.coefficients[static_cast<std::size_t>(ra)].estimate;
        for (long b = 0; b < k; ++b) {
            long fb = fe_index[common[static_cast<std::size_t>(b)]];
            long rb = re_index[common[static_cast<std::size_t>(b)]];
            vdiff(a, b) = fe.vcov(fa, fb) - re.vcov(ra, rb);
        }
    }
    vdiff = 0.5 * (vdiff + vdiff.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(vdiff);
    double max_abs = es.eigenvalues().cwiseAbs().maxCoeff();
    double tol = 1e-10 * std::max(max_abs, 1e-300);

    HausmanResult r;
    r.compared = common;
    for (long j = 0; j < k; ++j) {
        double ev = es.eigenvalues()(j);
        if (ev > tol) {
            double proj = es.eigenvectors().col(j).dot(diff);
            r.H += proj * proj / ev;
            ++r.df;
        }
    }
    r.p = r.df > 0 ? chi2_sf(r.H, static_cast<double>(r.df)) : 1.0;
    return r;
}

}  // namespace spatec
