#include "spatec/iv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "spatec/distributions.hpp"

namespace spatec {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kPi = 3.14159265358979323846;
constexpr double kZ975 = 1.959963984540054;

long qr_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr, long cols) {
    Eigen::MatrixXd R = qr.matrixR().topRows(cols).template triangularView<Eigen::Upper>();
    double max_diag = std::abs(R(0, 0));
    if (max_diag == 0.0) return 0;
    long rank = 0;
    for (long j = 0; j < cols; ++j)
        if (std::abs(R(j, j)) > kRankTol * max_diag) ++rank;
    return rank;
}

// Orthonormal basis of col(Z), rank-reduced by pivoted QR.
Eigen::MatrixXd col_basis(const Eigen::MatrixXd& Z) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    long rank = qr_rank(qr, Z.cols());
    if (rank == 0) throw EstimationError("instrument matrix is identically zero");
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(Z.rows(), rank);
    return Q;
}

double corr_squared(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd ca = a.array() - a.mean();
    Eigen::VectorXd cb = b.array() - b.mean();
    double na = ca.norm(), nb = cb.norm();
    if (na == 0.0 || nb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    double r = ca.dot(cb) / (na * nb);
    return r * r;
}

// 2SLS on prebuilt matrices: project X onto the instrument space spanned by Q,
// solve, and report z-based inference from structural residuals.
FitResult iv_core(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  const std::vector<std::string>& names, const Eigen::MatrixXd& Q) {
    const long n = y.size();
    const long p = X.cols();
    if (Q.cols() < p)
        throw EstimationError("under-identified: instrument space has rank " +
                              std::to_string(Q.cols()) + " for " + std::to_string(p) +
                              " parameters");
    Eigen::MatrixXd Xhat = Q * (Q.transpose() * X);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xhat);
    long rank = qr_rank(qr, p);
    if (rank < p) {
        std::string msg = "instrumented design is rank-deficient:";
        const auto& perm = qr.colsPermutation().indices();
        for (long j = rank; j < p; ++j) msg += " " + names[static_cast<std::size_t>(perm(j))];
        throw EstimationError(msg);
    }
    if (n <= p)
        throw EstimationError("insufficient observations: n = " + std::to_string(n) +
                              ", parameters = " + std::to_string(p));

    Eigen::VectorXd beta = qr.solve(y);
    Eigen::VectorXd fitted = X * beta;  // structural prediction
    Eigen::VectorXd resid = y - fitted;
    double ssr = resid.squaredNorm();
    double sigma2 = ssr / static_cast<double>(n);

    Eigen::MatrixXd R = qr.matrixR().topRows(p).template triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv =
        R.topLeftCorner(p, p).template triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd core = qr.colsPermutation() * (rinv * rinv.transpose()) *
                           qr.colsPermutation().transpose();

    FitResult fit;
    fit.n = n;
    fit.df_resid = n - p;
    fit.df_model = p - 1;
    fit.vcov = sigma2 * core;
    fit.vcov = 0.5 * (fit.vcov + fit.vcov.transpose()).eval();
    fit.rmse = std::sqrt(ssr / static_cast<double>(fit.df_resid));
    double sigma2_ml = std::max(sigma2, 1e-300);
    fit.loglik = -0.5 * static_cast<double>(n) * (std::log(2.0 * kPi * sigma2_ml) + 1.0);
    fit.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(p);
    fit.bic = -2.0 * fit.loglik + static_cast<double>(p) * std::log(static_cast<double>(n));
    fit.residuals = resid;
    fit.fitted = fitted;
    fit.stat_label = "z";
    fit.stat_df = 0.0;
    double pr2 = corr_squared(y, fitted);
    if (!std::isnan(pr2)) fit.pseudo_r2 = pr2;

    for (long j = 0; j < p; ++j) {
        Coefficient c;
        c.name = names[static_cast<std::size_t>(j)];
        c.estimate = beta(j);
        c.se = std::sqrt(std::max(0.0, fit.vcov(j, j)));
        if (c.se > 0.0) {
            c.stat = c.estimate / c.se;
            c.p = 2.0 * normal_sf(std::abs(c.stat));
            c.ci_low = c.estimate - kZ975 * c.se;
            c.ci_high = c.estimate + kZ975 * c.se;
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

struct IvDesign {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;   // [endogenous, exogenous, _cons]
    Eigen::MatrixXd Z;   // [instruments, exogenous, _cons]
    std::vector<std::string> x_names;
    std::vector<std::size_t> rows;
};

void check_iv_spec(const IvSpec& spec) {
    if (spec.endogenous.empty()) throw SpecError("no endogenous regressors given");
    if (spec.instruments.size() < spec.endogenous.size())
        throw SpecError("order condition fails: " + std::to_string(spec.instruments.size()) +
                        " instruments for " + std::to_string(spec.endogenous.size()) +
                        " endogenous regressors");
    std::set<std::string> endo(spec.endogenous.begin(), spec.endogenous.end());
    for (const auto& c : spec.exogenous)
        if (endo.count(c)) throw SpecError("column '" + c + "' is both endogenous and exogenous");
}

IvDesign build_iv_design(const PropertyDataset& ds, const IvSpec& spec) {
    check_iv_spec(spec);
    std::vector<std::string> x_cols = spec.endogenous;
    x_cols.insert(x_cols.end(), spec.exogenous.begin(), spec.exogenous.end());
    std::vector<std::string> extras = spec.instruments;
    Design d = build_design(ds, spec.response, x_cols, spec.intercept, extras);

    IvDesign out;
    out.y = d.y;
    out.X = d.X;
    out.x_names = d.names;
    out.rows = d.rows;

    const auto n = static_cast<Eigen::Index>(d.rows.size());
    const long nz = static_cast<long>(spec.instruments.size() + spec.exogenous.size()) +
                    (spec.intercept ? 1 : 0);
    out.Z.resize(n, nz);
    long col = 0;
    for (const auto& name : spec.instruments) {
        const auto& c = ds.column(name);
        for (Eigen::Index i = 0; i < n; ++i) out.Z(i, col) = c[d.rows[static_cast<std::size_t>(i)]];
        ++col;
    }
    for (std::size_t j = 0; j < spec.exogenous.size(); ++j) {
        out.Z.col(col) = d.X.col(static_cast<Eigen::Index>(spec.endogenous.size() + j));
        ++col;
    }
    if (spec.intercept) out.Z.col(col).setOnes();
    return out;
}

}  // namespace

FitResult fit_2sls(const PropertyDataset& ds, const IvSpec& spec) {
    IvDesign d = build_iv_design(ds, spec);
    FitResult fit = iv_core(d.y, d.X, d.x_names, col_basis(d.Z));
    fit.rows_used = d.rows;
    return fit;
}

WeakIvReport weak_iv_test(const PropertyDataset& ds, const IvSpec& spec, double size) {
    if (spec.instruments.empty()) throw SpecError("weak-instrument test needs instruments");
    check_iv_spec(spec);

    IvDesign d = build_iv_design(ds, spec);
    const long n = d.y.size();
    const long m = static_cast<long>(spec.endogenous.size());
    const long q = static_cast<long>(spec.instruments.size());

    // Partial the included exogenous columns (and intercept) out of both the
    // endogenous block and the excluded instruments.
    const long n_exog = static_cast<long>(spec.exogenous.size()) + (spec.intercept ? 1 : 0);
    Eigen::MatrixXd endog = d.X.leftCols(m);
    Eigen::MatrixXd zx = d.Z.leftCols(q);
    if (n_exog > 0) {
        Eigen::MatrixXd W = d.X.rightCols(n_exog);
        Eigen::MatrixXd Qw = col_basis(W);
        endog -= Qw * (Qw.transpose() * endog);
        zx -= Qw * (Qw.transpose() * zx);
    }
    Eigen::MatrixXd Qz = col_basis(zx);
    Eigen::MatrixXd proj = Qz * (Qz.transpose() * endog);
    Eigen::MatrixXd s1 = endog.transpose() * proj;               // explained by instruments
    Eigen::MatrixXd s0 = endog.transpose() * endog - s1;         // first-stage residual SS

    const long k_first = n_exog + q;  // first-stage parameter count
    if (n <= k_first) throw EstimationError("insufficient observations for the first stage");

    double min_eig;
    if (m == 1) {
        min_eig = s1(0, 0) / s0(0, 0);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(0.5 * (s0 + s0.transpose()));
        Eigen::VectorXd ev = es0.eigenvalues();
        for (long j = 0; j < m; ++j)
            if (ev(j) <= 0.0) throw EstimationError("first-stage residual matrix is singular");
        Eigen::MatrixXd s0_inv_half =
            es0.eigenvectors() * ev.array().rsqrt().matrix().asDiagonal() *
            es0.eigenvectors().transpose();
        Eigen::MatrixXd b = s0_inv_half * 0.5 * (s1 + s1.transpose()) * s0_inv_half;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esb(b);
        min_eig = esb.eigenvalues().minCoeff();
    }

    WeakIvReport rep;
    rep.n = n;
    rep.n_endogenous = m;
    rep.n_instruments = q;
    rep.size = size;
    rep.stat = min_eig * static_cast<double>(n - k_first) / static_cast<double>(q);

    if (m == 1 && q == 1) {
        rep.critical_values = {{0.10, 16.38}, {0.15, 8.96}, {0.20, 6.66}, {0.25, 5.53}};
        auto it = rep.critical_values.find(size);
        if (it == rep.critical_values.end())
            throw DomainError("no critical value tabulated for test size " + std::to_string(size));
        rep.conclusion = rep.stat > it->second ? "strong" : "weak";
    }
    return rep;
}

FitResult fit_sar_gs2sls(const PropertyDataset& ds, const IvSpec& spec) {
    if (spec.spatial == nullptr) throw SpecError("spatial weight matrix required");
    const SpatialWeightMatrix& W = *spec.spatial;

    // The lag needs every observation, so missing values in any used column are
    // not supported here. An empty endogenous set is allowed: the spatial lag
    // itself is the only instrumented regressor.
    IvSpec flat = spec;
    flat.spatial = nullptr;
    if (!flat.endogenous.empty()) check_iv_spec(flat);

    std::vector<std::string> x_cols = flat.endogenous;
    x_cols.insert(x_cols.end(), flat.exogenous.begin(), flat.exogenous.end());
    Design d = build_design(ds, flat.response, x_cols, flat.intercept, flat.instruments);
    if (d.rows.size() != ds.n_rows())
        throw DomainError("missing values are not supported with a spatial weight matrix");
    if (W.w.rows() != static_cast<Eigen::Index>(ds.n_rows()))
        throw DomainError("weight matrix dimension " + std::to_string(W.w.rows()) +
                          " does not match n = " + std::to_string(ds.n_rows()));

    if (W.w.norm() == 0.0) {
        // No spatial dependence is expressible: the lag column is identically 0.
        FitResult fit;
        if (!flat.endogenous.empty()) {
            fit = fit_2sls(ds, flat);
        } else {
            ModelSpec ms;
            ms.response = flat.response;
            ms.regressors = flat.exogenous;
            ms.intercept = flat.intercept;
            fit = fit_ols(ds, ms);
            fit.stat_label = "z";
            double pr2 = corr_squared(fit.fitted + fit.residuals, fit.fitted);
            if (!std::isnan(pr2)) fit.pseudo_r2 = pr2;
        }
        fit.lambda = 0.0;
        fit.weights_digest = W.digest;
        return fit;
    }

    Eigen::VectorXd wy = W.w * d.y;
    const long p = d.X.cols() + 1;
    Eigen::MatrixXd X(d.y.size(), p);
    X.col(0) = wy;
    X.rightCols(p - 1) = d.X;
    std::vector<std::string> names;
    names.push_back("W*" + flat.response);
    names.insert(names.end(), d.names.begin(), d.names.end());

    // Instruments: excluded instruments and exogenous regressors, their first
    // and second spatial lags, and the intercept. W is row-standardized, so
    // lagging the intercept would only duplicate it.
    const long nz0 = static_cast<long>(flat.instruments.size() + flat.exogenous.size());
    Eigen::MatrixXd Z0(d.y.size(), nz0);
    long col = 0;
    for (const auto& name : flat.instruments) {
        const auto& c = ds.column(name);
        for (Eigen::Index i = 0; i < Z0.rows(); ++i)
            Z0(i, col) = c[d.rows[static_cast<std::size_t>(i)]];
        ++col;
    }
    for (std::size_t j = 0; j < flat.exogenous.size(); ++j) {
        Z0.col(col) = d.X.col(static_cast<Eigen::Index>(flat.endogenous.size() + j));
        ++col;
    }
    Eigen::MatrixXd WZ = W.w * Z0;
    Eigen::MatrixXd W2Z = W.w * WZ;
    Eigen::MatrixXd H(d.y.size(), 3 * nz0 + (flat.intercept ? 1 : 0));
    H.leftCols(nz0) = Z0;
    H.middleCols(nz0, nz0) = WZ;
    H.middleCols(2 * nz0, nz0) = W2Z;
    if (flat.intercept) H.col(H.cols() - 1).setOnes();

    FitResult fit = iv_core(d.y, X, names, col_basis(H));
    fit.rows_used = d.rows;
    fit.lambda = fit.coefficients[0].estimate;
    fit.lambda_warning = std::abs(*fit.lambda) >= 1.0;
    fit.weights_digest = W.digest;
    return fit;
}

}  // namespace spatec
