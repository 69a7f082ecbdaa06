#include "spatec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spatec/rng.hpp"
#include "spatec/spatial.hpp"

namespace spatec {

SplitResult split_train_test(std::size_t n, double train_frac, std::uint64_t seed, bool exact) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw DomainError("train fraction must lie strictly between 0 and 1");
    if (n < 2) throw DomainError("need at least 2 rows to split");

    Rng rng(seed);
    SplitResult out;
    if (exact) {
        auto k = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
        k = std::clamp<std::size_t>(k, 1, n - 1);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        out.train.assign(idx.begin(), idx.begin() + static_cast<long>(k));
        out.test.assign(idx.begin() + static_cast<long>(k), idx.end());
        std::sort(out.train.begin(), out.train.end());
        std::sort(out.test.begin(), out.test.end());
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.uniform() < train_frac) out.train.push_back(i);
            else out.test.push_back(i);
        }
    }
    if (out.train.empty() || out.test.empty())
        throw DomainError("split produced an empty partition; use a different seed");
    return out;
}

EvalReport evaluate_predictions(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
    if (actual.size() != predicted.size()) throw DomainError("actual and predicted lengths differ");
    const long n = actual.size();
    if (n == 0) throw DomainError("nothing to evaluate");

    Eigen::VectorXd resid = actual - predicted;
    EvalReport rep;
    rep.n_test = static_cast<std::size_t>(n);
    rep.rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
    rep.mae = resid.cwiseAbs().mean();

    rep.resid_mean = resid.mean();
    double m2 = (resid.array() - rep.resid_mean).square().mean();
    double m3 = (resid.array() - rep.resid_mean).cube().mean();
    rep.resid_sd = n > 1 ? std::sqrt((resid.array() - rep.resid_mean).square().sum() /
                                     static_cast<double>(n - 1))
                         : 0.0;
    rep.resid_skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

    Eigen::VectorXd ca = actual.array() - actual.mean();
    Eigen::VectorXd cp = predicted.array() - predicted.mean();
    if (ca.norm() == 0.0 || cp.norm() == 0.0) {
        rep.r2_note = "r2 undefined: zero variance in actual or predicted values";
    } else {
        double r = ca.dot(cp) / (ca.norm() * cp.norm());
        rep.r2_corr = r * r;
        rep.r2_ss = 1.0 - resid.squaredNorm() / ca.squaredNorm();
    }
    return rep;
}

// 2nd-percentile pairwise distance. The generator keeps W local on purpose: a
// broad cutoff averages Wy toward the sample mean, which leaves the lag nearly
// collinear with the intercept and unrecoverable by any estimator.
static double sim_cutoff(const Eigen::MatrixXd& coords) {
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(coords.rows()) *
              static_cast<std::size_t>(coords.rows() - 1) / 2);
    for (Eigen::Index i = 0; i < coords.rows(); ++i)
        for (Eigen::Index j = i + 1; j < coords.rows(); ++j)
            d.push_back((coords.row(i) - coords.row(j)).norm());
    std::sort(d.begin(), d.end());
    return d[static_cast<std::size_t>(static_cast<double>(d.size() - 1) * 0.02)];
}

PropertyDataset simulate_market(const MarketDGP& dgp) {
    if (dgp.n < 10) throw DomainError("simulate_market: n must be at least 10");
    if (!(std::abs(dgp.lambda) < 1.0))
        throw DomainError("simulate_market: |lambda| must be below 1");
    if (!(dgp.noise_sd > 0.0)) throw DomainError("simulate_market: noise sd must be positive");
    if (!(std::abs(dgp.endogeneity) <= 1.0))
        throw DomainError("simulate_market: endogeneity must lie in [-1, 1]");

    Rng rng(dgp.seed);
    const auto n = dgp.n;
    const double sigma_v = 0.4;

    std::vector<PropertyRecord> records(n);
    std::vector<double> dist(n), lnsqft(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
        PropertyRecord& r = records[i];
        // a strip along the coast with cross-shore jitter
        double t = rng.uniform();
        double lat = 33.445 + 0.050 * t + 0.004 * rng.normal();
        double lon = -117.732 + 0.084 * t + 0.004 * rng.normal();
        r.latitude = lat;
        r.longitude = lon;

        r.beds = 2.0 + static_cast<double>(rng.binomial(7, 0.22));
        r.baths = 1.0 + 0.5 * static_cast<double>(rng.binomial(8, 0.45));
        r.stories = 1.0 + static_cast<double>(rng.binomial(2, 0.25));
        r.parking = 1.0 + static_cast<double>(rng.binomial(4, 0.3));
        double su = rng.uniform();
        r.style = su < 0.60   ? HomeStyle::single_family
                  : su < 0.85 ? HomeStyle::condo
                  : su < 0.95 ? HomeStyle::townhomes
                              : HomeStyle::duplex_triplex;
        r.year_built = 1950 + static_cast<int>(rng.below(74));
        r.zipcode = 92624 + static_cast<long>(rng.below(6));
        r.sale_year = 2021 + static_cast<int>(rng.below(4));
        r.sale_month = 1 + static_cast<int>(rng.below(12));
        r.house_id = static_cast<long>(i) + 1;
        r.address = std::to_string(100 + i) + " Shoreline Dr";

        double e1 = rng.normal();
        double e2 = rng.normal();
        double v = sigma_v * (dgp.endogeneity * e1 +
                              std::sqrt(1.0 - dgp.endogeneity * dgp.endogeneity) * e2);
        u[i] = dgp.noise_sd * e1;

        lnsqft[i] = 7.55 + 0.08 * (r.beds - 3.5) +
                    dgp.instrument_strength * (r.parking - 2.2) + v;
        r.sqft = std::exp(lnsqft[i]);
        r.lot_sqft = r.sqft * (2.0 + 3.0 * rng.uniform());

        dist[i] = point_distance({lat, lon}, {kSimRefLat, kSimRefLon},
                                 DistanceMetric::degree_euclidean);
        if (dist[i] <= 0.0) dist[i] = 1e-9;
    }

    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const PropertyRecord& r = records[i];
        rhs(static_cast<Eigen::Index>(i)) =
            dgp.beta0 + dgp.b_lnsqft * lnsqft[i] + dgp.b_beds * r.beds +
            dgp.b_baths * r.baths + dgp.b_lndist * std::log(dist[i]) +
            dgp.b_stories * r.stories +
            dgp.b_single_family * (r.style == HomeStyle::single_family ? 1.0 : 0.0) + u[i];
    }

    Eigen::VectorXd lnprice;
    if (dgp.lambda == 0.0) {
        lnprice = rhs;  // identity system, solved exactly
    } else {
        Eigen::MatrixXd coords(static_cast<Eigen::Index>(n), 2);
        for (std::size_t i = 0; i < n; ++i) {
            coords(static_cast<Eigen::Index>(i), 0) = records[i].latitude;
            coords(static_cast<Eigen::Index>(i), 1) = records[i].longitude;
        }
        SpatialWeightMatrix W = build_weights(coords, sim_cutoff(coords), true);
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n)) -
                            dgp.lambda * W.w;
        lnprice = A.partialPivLu().solve(rhs);
    }
    for (std::size_t i = 0; i < n; ++i)
        records[i].price = std::exp(lnprice(static_cast<Eigen::Index>(i)));

    PropertyDataset ds(std::move(records));
    ds.set_column("dist_pch", std::move(dist));
    return ds;
}

SpatialWeightMatrix sim_weights(const PropertyDataset& ds) {
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(ds.n_rows()), 2);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        coords(static_cast<Eigen::Index>(i), 0) = ds.records()[i].latitude;
        coords(static_cast<Eigen::Index>(i), 1) = ds.records()[i].longitude;
    }
    return build_weights(coords, sim_cutoff(coords), true);
}

MonteCarloSummary monte_carlo(const MarketDGP& dgp,
                              const std::function<FitResult(const PropertyDataset&)>& estimator,
                              int reps, const std::map<std::string, double>& truth) {
    if (reps < 50) throw DomainError("monte_carlo: need at least 50 replications");

    std::map<std::string, std::vector<double>> estimates;
    std::map<std::string, long> covered, rejected;
    MonteCarloSummary s;
    s.reps = reps;

    for (int rep = 0; rep < reps; ++rep) {
        MarketDGP d = dgp;
        d.seed = dgp.seed + static_cast<std::uint64_t>(rep);
        try {
            PropertyDataset ds = simulate_market(d);
            FitResult fit = estimator(ds);
            for (const auto& [name, tv] : truth) {
                const Coefficient* found = nullptr;
                for (const auto& c : fit.coefficients)
                    if (c.name == name) {
                        found = &c;
                        break;
                    }
                if (found == nullptr) continue;
                estimates[name].push_back(found->estimate);
                if (found->ci_low <= tv && tv <= found->ci_high) ++covered[name];
                if (found->p < 0.05) ++rejected[name];
            }
        } catch (const std::exception&) {
            ++s.failures;
        }
    }

    for (const auto& [name, vals] : estimates) {
        if (vals.empty()) continue;
        double mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                      static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        double sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
        s.mean_estimate[name] = mean;
        s.mean_bias[name] = mean - truth.at(name);
        s.mc_se[name] = sd / std::sqrt(static_cast<double>(vals.size()));
        s.coverage95[name] =
            static_cast<double>(covered[name]) / static_cast<double>(vals.size());
        s.rejection_rate[name] =
            static_cast<double>(rejected[name]) / static_cast<double>(vals.size());
    }
    return s;
}

}  // namespace spatec
