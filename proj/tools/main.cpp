#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "spatec/dataset.hpp"
#include "spatec/discrete.hpp"
#include "spatec/error.hpp"
#include "spatec/eval.hpp"
#include "spatec/iv.hpp"
#include "spatec/panel.hpp"
#include "spatec/pipeline.hpp"
#include "spatec/regress.hpp"
#include "spatec/report.hpp"
#include "spatec/spatial.hpp"

namespace {

using nlohmann::json;
using namespace spatec;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

bool g_json = false;

void print_out(const json& j, const std::string& text) {
    if (g_json)
        std::cout << j.dump(2) << '\n';
    else
        std::cout << text;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw Error("write failed for '" + path + "'");
}

// Data loading plus the standard derivations. Clustering columns are attached
// only when --k is given, since they need a seed.
struct PrepOpts {
    std::string data;
    double ref_lat = kUnset;
    double ref_lon = kUnset;
    std::string metric = "degree_euclidean";
    double threshold = kUnset;
    int k = 0;
    std::uint64_t cluster_seed = 0;
    bool cluster_seed_set = false;
    std::string linkage = "ward";
};

DistanceMetric parse_metric(const std::string& s) {
    if (s == "degree_euclidean") return DistanceMetric::degree_euclidean;
    if (s == "haversine_km") return DistanceMetric::haversine_km;
    throw SpecError("unknown metric '" + s + "' (degree_euclidean, haversine_km)");
}

Linkage parse_linkage(const std::string& s) {
    if (s == "ward") return Linkage::ward;
    if (s == "complete") return Linkage::complete;
    throw SpecError("unknown linkage '" + s + "' (ward, complete)");
}

Vce parse_vce(const std::string& s) {
    if (s.empty() || s == "classical") return {};
    if (s == "robust") return {VceKind::robust_hc1, ""};
    if (s.rfind("cluster:", 0) == 0) {
        std::string col = s.substr(8);
        if (col.empty()) throw SpecError("--vce cluster:<column> needs a column name");
        return {VceKind::cluster, col};
    }
    throw SpecError("unknown --vce '" + s + "' (classical, robust, cluster:<column>)");
}

void attach_cluster(PropertyDataset& ds, const std::string& column, const ClusterAssignment& a,
                    const std::string& dummy_prefix) {
    std::vector<double> col(a.labels.size());
    for (std::size_t i = 0; i < a.labels.size(); ++i) col[i] = a.labels[i];
    ds.set_column(column, col);
    if (dummy_prefix.empty()) return;
    for (int c = 1; c <= a.k; ++c) {
        std::vector<double> dummy(a.labels.size());
        for (std::size_t i = 0; i < a.labels.size(); ++i) dummy[i] = a.labels[i] == c ? 1.0 : 0.0;
        ds.set_column(dummy_prefix + std::to_string(c), dummy);
    }
}

Eigen::MatrixXd coord_matrix(const PropertyDataset& ds, const std::string& lat_col,
                             const std::string& lon_col) {
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(ds.n_rows()), 2);
    coords.col(0) = ds.column_vector(lat_col);
    coords.col(1) = ds.column_vector(lon_col);
    return coords;
}

PropertyDataset prepare(const PrepOpts& o, double* threshold_used = nullptr) {
    LoadResult loaded = load_csv(o.data, {});
    PropertyDataset ds = std::move(loaded.dataset);
    bool have_ref = !std::isnan(o.ref_lat) && !std::isnan(o.ref_lon);
    if (!ds.has_column("dist_pch") && have_ref)
        ds.set_column("dist_pch",
                      distances_to_reference(ds.column("latitude"), ds.column("longitude"),
                                             Point{o.ref_lat, o.ref_lon}, parse_metric(o.metric)));
    if (ds.has_column("dist_pch")) {
        double thr = o.threshold;
        if (std::isnan(thr)) {
            const auto& price = ds.column("price");
            double sum = 0.0;
            for (double v : price) sum += v;
            thr = sum / static_cast<double>(price.size());
        }
        ds = derive_columns(ds, thr);
        ds.set_column("std_latitude", standardize(ds.column("latitude")));
        ds.set_column("std_longitude", standardize(ds.column("longitude")));
        if (threshold_used != nullptr) *threshold_used = thr;
    } else if (threshold_used != nullptr) {
        *threshold_used = kUnset;
    }
    if (o.k > 0) {
        if (!o.cluster_seed_set)
            throw SpecError("--k requires --cluster-seed for reproducible clustering");
        Eigen::MatrixXd raw = coord_matrix(ds, "latitude", "longitude");
        attach_cluster(ds, "kmeans_cluster", kmeans(raw, o.k, o.cluster_seed), "kmeans_clus");
        if (ds.has_column("std_latitude"))
            attach_cluster(ds, "std_kmeans_cluster",
                           kmeans(coord_matrix(ds, "std_latitude", "std_longitude"), o.k,
                                  o.cluster_seed + 1),
                           "std_clust");
        attach_cluster(ds, "hier_cluster",
                       cut_dendrogram(hclust(raw, parse_linkage(o.linkage)), o.k), "");
    }
    return ds;
}

void add_prep_opts(CLI::App* cmd, PrepOpts& o) {
    cmd->add_option("--data", o.data, "input property CSV")->required();
    cmd->add_option("--ref-lat", o.ref_lat, "reference latitude for dist_pch");
    cmd->add_option("--ref-lon", o.ref_lon, "reference longitude for dist_pch");
    cmd->add_option("--metric", o.metric, "degree_euclidean or haversine_km");
    cmd->add_option("--threshold", o.threshold, "pricedummy cutoff (default: mean price)");
    cmd->add_option("--k", o.k, "attach k-means / hierarchical cluster columns");
    cmd->add_option("--cluster-seed", o.cluster_seed, "seed for --k clustering")
        ->each([&](const std::string&) { o.cluster_seed_set = true; });
    cmd->add_option("--linkage", o.linkage, "ward or complete (with --k)");
}

std::vector<int> finite_labels(const std::vector<double>& raw, std::vector<std::size_t>& keep) {
    std::vector<int> labels;
    labels.reserve(keep.size());
    for (std::size_t r : keep) labels.push_back(static_cast<int>(std::lround(raw[r])));
    return labels;
}

// ---- subcommand state ----

PrepOpts prep_describe, prep_transform, prep_fit, prep_test, prep_eval;

struct {
    std::vector<std::string> columns;
} opt_describe;

struct {
    std::string out;
} opt_transform;

struct {
    std::string data;
    int k = 3;
    std::uint64_t seed = 0;
    bool std_coords = false;
    std::string assign_out;
} opt_kmeans;

struct {
    std::string data;
    std::string linkage = "ward";
    int groups = 3;
    std::string dendrogram_out;
    std::string assign_out;
} opt_hier;

struct {
    std::string data;
    double cutoff = kUnset;
    std::string matrix_out;
} opt_weights;

struct {
    std::string y;
    std::vector<std::string> x;
    std::string absorb;
    std::string vce;
    bool no_intercept = false;
    std::string residuals_out;
} opt_ols;

struct {
    std::string y;
    std::vector<std::string> x;
    std::vector<std::string> iv;
    bool no_intercept = false;
    double cutoff = kUnset;  // sar only
} opt_iv, opt_sar;

struct {
    std::string y;
    std::vector<std::string> x;
    bool no_intercept = false;
    bool classification = false;
    double cutpoint = 0.5;
} opt_binary_logit, opt_binary_probit;

struct {
    std::string y;
    std::vector<std::string> x;
    std::string unit, time;
    std::string vce;
} opt_fe, opt_re;

struct {
    std::string y;
    std::string focus;
    std::vector<std::string> x;
    double scale = 1.0;
} opt_fracpoly;

struct {
    std::string values;
    std::string by;
} opt_anova;

struct {
    std::string y;
    std::vector<std::string> x;
    std::vector<std::string> iv;
    bool no_intercept = false;
    double size = 0.10;
} opt_weakiv;

struct {
    std::string y;
    std::vector<std::string> x;
    std::vector<std::string> x0;
    std::string link = "logit";
} opt_lrtest;

struct {
    std::string y;
    std::vector<std::string> x;
    std::vector<std::string> x_re;
    std::string unit, time;
} opt_hausman;

struct {
    std::string y;
    std::vector<std::string> x;
    double train_frac = 0.8;
    std::uint64_t seed = 0;
    bool exact = false;
} opt_eval;

struct {
    std::string out;
    MarketDGP dgp;
} opt_sim;

struct {
    std::string config;
    bool validate_only = false;
} opt_pipeline;

IvSpec build_iv_spec(const PropertyDataset& ds, const std::string& y,
                     const std::vector<std::string>& x, const std::vector<std::string>& iv,
                     bool no_intercept) {
    IvSpec spec;
    spec.response = y;
    spec.intercept = !no_intercept;
    spec.exogenous = expand_regressors(ds, x);
    for (const auto& pair : iv) {
        std::size_t eq = pair.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size())
            throw SpecError("--iv expects endogenous=instrument[,instrument...], got '" + pair +
                            "'");
        spec.endogenous.push_back(pair.substr(0, eq));
        std::string rest = pair.substr(eq + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            std::size_t comma = rest.find(',', start);
            std::string tok = rest.substr(start, comma == std::string::npos ? std::string::npos
                                                                            : comma - start);
            if (!tok.empty()) spec.instruments.push_back(tok);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    return spec;
}

void run_binary(const PropertyDataset& ds, Link link, const std::string& y,
                const std::vector<std::string>& x, bool no_intercept, bool classification,
                double cutpoint) {
    ModelSpec spec;
    spec.response = y;
    spec.regressors = expand_regressors(ds, x);
    spec.intercept = !no_intercept;
    BinaryFit fit = fit_binary(ds, spec, link);
    auto me = marginal_effects(fit);
    json j{{"fit", to_json(fit)}, {"marginal_effects", to_json(me)}};
    std::string title = (link == Link::logit ? "Logit " : "Probit ") + y;
    std::string text =
        render_text(fit, title) + "Marginal effects at means\n" + render_text(me);
    if (classification) {
        Eigen::VectorXd actual(fit.fitted_prob.size());
        const auto& col = ds.column(y);
        for (Eigen::Index i = 0; i < actual.size(); ++i)
            actual(i) = col[fit.rows_used[static_cast<std::size_t>(i)]];
        ClassificationMetrics cm = classification_table(fit.fitted_prob, actual, cutpoint);
        j["classification"] = to_json(cm);
        text += render_text(cm);
    }
    print_out(j, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hedonic and spatial regression toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand all subcommand help");

    // describe
    auto* cmd_describe = app.add_subcommand("describe", "per-column summary statistics");
    add_prep_opts(cmd_describe, prep_describe);
    cmd_describe->add_option("--columns", opt_describe.columns, "columns to summarize")
        ->delimiter(',');
    cmd_describe->add_flag("--json", g_json, "emit JSON");
    cmd_describe->callback([] {
        PropertyDataset ds = prepare(prep_describe);
        std::vector<std::string> cols =
            opt_describe.columns.empty() ? ds.column_names() : opt_describe.columns;
        DescriptiveStats st = describe(ds, cols);
        print_out(to_json(st), render_text(st));
    });

    // transform
    auto* cmd_transform =
        app.add_subcommand("transform", "derive model columns and write the result");
    add_prep_opts(cmd_transform, prep_transform);
    cmd_transform->add_option("--out", opt_transform.out, "output CSV path")->required();
    cmd_transform->add_flag("--json", g_json, "emit JSON");
    cmd_transform->callback([] {
        double threshold = kUnset;
        PropertyDataset ds = prepare(prep_transform, &threshold);
        if (!ds.has_column("lnprice"))
            throw ColumnError(
                "dist_pch is missing; pass --ref-lat/--ref-lon so it can be computed");
        write_csv(ds, opt_transform.out);
        json j{{"n_rows", ds.n_rows()},
               {"price_threshold", threshold},
               {"columns", ds.column_names()},
               {"out", opt_transform.out}};
        std::string text = "Wrote " + std::to_string(ds.n_rows()) + " rows, " +
                           std::to_string(ds.column_names().size()) + " columns to " +
                           opt_transform.out + "\npricedummy threshold " + fmt6(threshold) + "\n";
        print_out(j, text);
    });

    // cluster kmeans | hier
    auto* cmd_cluster = app.add_subcommand("cluster", "geographic clustering");
    cmd_cluster->require_subcommand(1);
    auto* cmd_kmeans = cmd_cluster->add_subcommand("kmeans", "k-means over coordinates");
    cmd_kmeans->add_option("--data", opt_kmeans.data, "input property CSV")->required();
    cmd_kmeans->add_option("--k", opt_kmeans.k, "number of clusters");
    cmd_kmeans->add_option("--seed", opt_kmeans.seed, "seeding RNG")->required();
    cmd_kmeans->add_flag("--std", opt_kmeans.std_coords, "standardize coordinates first");
    cmd_kmeans->add_option("--assign-out", opt_kmeans.assign_out, "write leaf,label CSV");
    cmd_kmeans->add_flag("--json", g_json, "emit JSON");
    cmd_kmeans->callback([] {
        LoadResult loaded = load_csv(opt_kmeans.data, {});
        PropertyDataset& ds = loaded.dataset;
        Eigen::MatrixXd coords(static_cast<Eigen::Index>(ds.n_rows()), 2);
        if (opt_kmeans.std_coords) {
            auto la = standardize(ds.column("latitude"));
            auto lo = standardize(ds.column("longitude"));
            for (std::size_t i = 0; i < la.size(); ++i) {
                coords(static_cast<Eigen::Index>(i), 0) = la[i];
                coords(static_cast<Eigen::Index>(i), 1) = lo[i];
            }
        } else {
            coords = coord_matrix(ds, "latitude", "longitude");
        }
        ClusterAssignment a = kmeans(coords, opt_kmeans.k, opt_kmeans.seed);
        if (!opt_kmeans.assign_out.empty())
            write_file(opt_kmeans.assign_out, assignment_csv(a));
        print_out(to_json(a), render_text(a));
    });
    auto* cmd_hier = cmd_cluster->add_subcommand("hier", "agglomerative clustering");
    cmd_hier->add_option("--data", opt_hier.data, "input property CSV")->required();
    cmd_hier->add_option("--linkage", opt_hier.linkage, "ward or complete");
    cmd_hier->add_option("--groups", opt_hier.groups, "cut the tree into this many groups");
    cmd_hier->add_option("--dendrogram-out", opt_hier.dendrogram_out, "write merge-step CSV");
    cmd_hier->add_option("--assign-out", opt_hier.assign_out, "write leaf,label CSV");
    cmd_hier->add_flag("--json", g_json, "emit JSON");
    cmd_hier->callback([] {
        LoadResult loaded = load_csv(opt_hier.data, {});
        Eigen::MatrixXd coords = coord_matrix(loaded.dataset, "latitude", "longitude");
        Dendrogram den = hclust(coords, parse_linkage(opt_hier.linkage));
        ClusterAssignment cut = cut_dendrogram(den, opt_hier.groups);
        if (!opt_hier.dendrogram_out.empty())
            write_file(opt_hier.dendrogram_out, dendrogram_csv(den));
        if (!opt_hier.assign_out.empty()) write_file(opt_hier.assign_out, assignment_csv(cut));
        json j{{"dendrogram", to_json(den)}, {"cut", to_json(cut)}};
        print_out(j, render_text(cut));
    });

    // weights
    auto* cmd_weights = app.add_subcommand("weights", "inverse-distance spatial weights");
    cmd_weights->add_option("--data", opt_weights.data, "input property CSV")->required();
    cmd_weights->add_option("--cutoff", opt_weights.cutoff,
                            "neighbor cutoff (default: median pairwise distance)");
    cmd_weights->add_option("--matrix-out", opt_weights.matrix_out, "write the dense matrix CSV");
    cmd_weights->add_flag("--json", g_json, "emit JSON");
    cmd_weights->callback([] {
        LoadResult loaded = load_csv(opt_weights.data, {});
        Eigen::MatrixXd coords = coord_matrix(loaded.dataset, "latitude", "longitude");
        double cutoff = std::isnan(opt_weights.cutoff) ? median_pairwise_distance(coords)
                                                       : opt_weights.cutoff;
        SpatialWeightMatrix W = build_weights(coords, cutoff, true);
        if (!opt_weights.matrix_out.empty()) {
            std::ostringstream csv;
            for (Eigen::Index i = 0; i < W.w.rows(); ++i) {
                for (Eigen::Index k = 0; k < W.w.cols(); ++k) {
                    char buf[48];
                    std::snprintf(buf, sizeof(buf), "%.17g", W.w(i, k));
                    csv << (k > 0 ? "," : "") << buf;
                }
                csv << '\n';
            }
            write_file(opt_weights.matrix_out, csv.str());
        }
        json j{{"n", W.w.rows()},
               {"cutoff", cutoff},
               {"row_standardized", W.row_standardized},
               {"isolated", W.isolated},
               {"digest", W.digest}};
        std::ostringstream text;
        text << "Inverse-distance weights, cutoff " << fmt6(cutoff) << ", row-standardized\n"
             << "n " << W.w.rows() << "   isolated rows " << W.isolated.size() << "   digest "
             << W.digest << '\n';
        print_out(j, text.str());
    });

    // fit <estimator>
    auto* cmd_fit = app.add_subcommand("fit", "estimate a model");
    cmd_fit->require_subcommand(1);
    add_prep_opts(cmd_fit, prep_fit);
    cmd_fit->add_flag("--json", g_json, "emit JSON");

    auto* cmd_ols = cmd_fit->add_subcommand("ols", "least squares, optional absorbed effects");
    cmd_ols->add_option("--y", opt_ols.y, "response column")->required();
    cmd_ols->add_option("--x", opt_ols.x, "regressors (i.month / i.year expand)")
        ->required()
        ->delimiter(',');
    cmd_ols->add_option("--absorb", opt_ols.absorb, "absorb fixed effects of this column");
    cmd_ols->add_option("--vce", opt_ols.vce, "classical, robust, cluster:<column>");
    cmd_ols->add_flag("--no-intercept", opt_ols.no_intercept, "drop the constant");
    cmd_ols->add_option("--residuals-out", opt_ols.residuals_out, "write row,fitted,residual CSV");
    cmd_ols->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        ModelSpec spec;
        spec.response = opt_ols.y;
        spec.regressors = expand_regressors(ds, opt_ols.x);
        spec.intercept = !opt_ols.no_intercept;
        if (!opt_ols.absorb.empty()) spec.absorb = opt_ols.absorb;
        spec.vce = parse_vce(opt_ols.vce);
        FitResult fit = fit_ols(ds, spec);
        if (!opt_ols.residuals_out.empty()) write_file(opt_ols.residuals_out, residuals_csv(fit));
        print_out(to_json(fit), render_text(fit, "OLS " + opt_ols.y));
    });

    auto* cmd_2sls = cmd_fit->add_subcommand("2sls", "two-stage least squares");
    cmd_2sls->add_option("--y", opt_iv.y, "response column")->required();
    cmd_2sls->add_option("--x", opt_iv.x, "exogenous controls")->delimiter(',');
    cmd_2sls->add_option("--iv", opt_iv.iv, "endogenous=instrument[,instrument...]")->required();
    cmd_2sls->add_flag("--no-intercept", opt_iv.no_intercept, "drop the constant");
    cmd_2sls->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        IvSpec spec = build_iv_spec(ds, opt_iv.y, opt_iv.x, opt_iv.iv, opt_iv.no_intercept);
        FitResult fit = fit_2sls(ds, spec);
        print_out(to_json(fit), render_text(fit, "2SLS " + opt_iv.y));
    });

    auto* cmd_sar = cmd_fit->add_subcommand("sar", "spatial-lag model by GS2SLS");
    cmd_sar->add_option("--y", opt_sar.y, "response column")->required();
    cmd_sar->add_option("--x", opt_sar.x, "exogenous controls")->delimiter(',');
    cmd_sar->add_option("--iv", opt_sar.iv, "endogenous=instrument[,instrument...]");
    cmd_sar->add_option("--cutoff", opt_sar.cutoff,
                        "weights cutoff (default: median pairwise distance)");
    cmd_sar->add_flag("--no-intercept", opt_sar.no_intercept, "drop the constant");
    cmd_sar->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        Eigen::MatrixXd coords = coord_matrix(ds, "latitude", "longitude");
        double cutoff =
            std::isnan(opt_sar.cutoff) ? median_pairwise_distance(coords) : opt_sar.cutoff;
        SpatialWeightMatrix W = build_weights(coords, cutoff, true);
        IvSpec spec = build_iv_spec(ds, opt_sar.y, opt_sar.x, opt_sar.iv, opt_sar.no_intercept);
        spec.spatial = &W;
        FitResult fit = fit_sar_gs2sls(ds, spec);
        print_out(to_json(fit), render_text(fit, "GS2SLS spatial lag, " + opt_sar.y));
    });

    auto* cmd_logit = cmd_fit->add_subcommand("logit", "binary logit by Newton-Raphson");
    cmd_logit->add_option("--y", opt_binary_logit.y, "0/1 response column")->required();
    cmd_logit->add_option("--x", opt_binary_logit.x, "regressors")->delimiter(',');
    cmd_logit->add_flag("--no-intercept", opt_binary_logit.no_intercept, "drop the constant");
    cmd_logit->add_flag("--classification", opt_binary_logit.classification,
                        "also print the classification table");
    cmd_logit->add_option("--cutpoint", opt_binary_logit.cutpoint, "classification threshold");
    cmd_logit->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        run_binary(ds, Link::logit, opt_binary_logit.y, opt_binary_logit.x,
                   opt_binary_logit.no_intercept, opt_binary_logit.classification,
                   opt_binary_logit.cutpoint);
    });

    auto* cmd_probit = cmd_fit->add_subcommand("probit", "binary probit by Newton-Raphson");
    cmd_probit->add_option("--y", opt_binary_probit.y, "0/1 response column")->required();
    cmd_probit->add_option("--x", opt_binary_probit.x, "regressors")->delimiter(',');
    cmd_probit->add_flag("--no-intercept", opt_binary_probit.no_intercept, "drop the constant");
    cmd_probit->add_flag("--classification", opt_binary_probit.classification,
                         "also print the classification table");
    cmd_probit->add_option("--cutpoint", opt_binary_probit.cutpoint, "classification threshold");
    cmd_probit->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        run_binary(ds, Link::probit, opt_binary_probit.y, opt_binary_probit.x,
                   opt_binary_probit.no_intercept, opt_binary_probit.classification,
                   opt_binary_probit.cutpoint);
    });

    auto* cmd_fe = cmd_fit->add_subcommand("fe", "panel fixed effects (within)");
    cmd_fe->add_option("--y", opt_fe.y, "response column")->required();
    cmd_fe->add_option("--x", opt_fe.x, "regressors")->required()->delimiter(',');
    cmd_fe->add_option("--unit", opt_fe.unit, "panel unit column")->required();
    cmd_fe->add_option("--time", opt_fe.time, "panel time column")->required();
    cmd_fe->add_option("--vce", opt_fe.vce, "classical, robust, cluster:<column>");
    cmd_fe->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        ModelSpec spec;
        spec.response = opt_fe.y;
        spec.regressors = expand_regressors(ds, opt_fe.x);
        spec.vce = parse_vce(opt_fe.vce);
        FitResult fit = fit_fe(ds, PanelIndex{opt_fe.unit, opt_fe.time}, spec);
        print_out(to_json(fit), render_text(fit, "Fixed effects " + opt_fe.y));
    });

    auto* cmd_re = cmd_fit->add_subcommand("re", "panel random effects (Swamy-Arora GLS)");
    cmd_re->add_option("--y", opt_re.y, "response column")->required();
    cmd_re->add_option("--x", opt_re.x, "regressors")->required()->delimiter(',');
    cmd_re->add_option("--unit", opt_re.unit, "panel unit column")->required();
    cmd_re->add_option("--time", opt_re.time, "panel time column")->required();
    cmd_re->add_option("--vce", opt_re.vce, "classical, robust, cluster:<column>");
    cmd_re->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        ModelSpec spec;
        spec.response = opt_re.y;
        spec.regressors = expand_regressors(ds, opt_re.x);
        spec.vce = parse_vce(opt_re.vce);
        FitResult fit = fit_re(ds, PanelIndex{opt_re.unit, opt_re.time}, spec);
        print_out(to_json(fit), render_text(fit, "Random effects " + opt_re.y));
    });

    auto* cmd_fracpoly =
        cmd_fit->add_subcommand("fracpoly", "degree-2 fractional polynomial search");
    cmd_fracpoly->add_option("--y", opt_fracpoly.y, "response column")->required();
    cmd_fracpoly->add_option("--focus", opt_fracpoly.focus, "column receiving the power basis")
        ->required();
    cmd_fracpoly->add_option("--x", opt_fracpoly.x, "additional covariates")->delimiter(',');
    cmd_fracpoly->add_option("--scale", opt_fracpoly.scale, "divide the focus column first");
    cmd_fracpoly->callback([] {
        PropertyDataset ds = prepare(prep_fit);
        FracPolyResult r =
            fracpoly_search(ds, opt_fracpoly.y, opt_fracpoly.focus,
                            expand_regressors(ds, opt_fracpoly.x), opt_fracpoly.scale);
        print_out(to_json(r), render_text(r));
    });

    // test <diagnostic>
    auto* cmd_test = app.add_subcommand("test", "statistical tests");
    cmd_test->require_subcommand(1);
    add_prep_opts(cmd_test, prep_test);
    cmd_test->add_flag("--json", g_json, "emit JSON");

    auto add_anova = [&](const char* name, const char* desc) {
        auto* c = cmd_test->add_subcommand(name, desc);
        c->add_option("--values", opt_anova.values, "numeric column")->required();
        c->add_option("--by", opt_anova.by, "group label column")->required();
        c->callback([] {
            PropertyDataset ds = prepare(prep_test);
            const auto& vals = ds.column(opt_anova.values);
            const auto& by = ds.column(opt_anova.by);
            std::vector<std::size_t> keep;
            for (std::size_t i = 0; i < vals.size(); ++i)
                if (!std::isnan(vals[i]) && !std::isnan(by[i])) keep.push_back(i);
            std::vector<double> v;
            v.reserve(keep.size());
            for (std::size_t r : keep) v.push_back(vals[r]);
            AnovaResult res = oneway_anova_bartlett(v, finite_labels(by, keep));
            print_out(to_json(res), render_text(res));
        });
    };
    add_anova("anova", "one-way ANOVA with Bartlett's equal-variance test");
    add_anova("bartlett", "alias of anova (same output)");

    auto* cmd_weakiv = cmd_test->add_subcommand("weakiv", "Cragg-Donald weak-instrument test");
    cmd_weakiv->add_option("--y", opt_weakiv.y, "response column")->required();
    cmd_weakiv->add_option("--x", opt_weakiv.x, "exogenous controls")->delimiter(',');
    cmd_weakiv->add_option("--iv", opt_weakiv.iv, "endogenous=instrument[,instrument...]")
        ->required();
    cmd_weakiv->add_flag("--no-intercept", opt_weakiv.no_intercept, "drop the constant");
    cmd_weakiv->add_option("--size", opt_weakiv.size, "nominal Wald size for the verdict");
    cmd_weakiv->callback([] {
        PropertyDataset ds = prepare(prep_test);
        IvSpec spec = build_iv_spec(ds, opt_weakiv.y, opt_weakiv.x, opt_weakiv.iv,
                                    opt_weakiv.no_intercept);
        WeakIvReport r = weak_iv_test(ds, spec, opt_weakiv.size);
        print_out(to_json(r), render_text(r));
    });

    auto* cmd_lrtest = cmd_test->add_subcommand("lrtest", "likelihood-ratio test of nested fits");
    cmd_lrtest->add_option("--y", opt_lrtest.y, "0/1 response column")->required();
    cmd_lrtest->add_option("--x", opt_lrtest.x, "unrestricted regressors")
        ->required()
        ->delimiter(',');
    cmd_lrtest->add_option("--x0", opt_lrtest.x0, "restricted regressors (default: none)")
        ->delimiter(',');
    cmd_lrtest->add_option("--link", opt_lrtest.link, "logit or probit");
    cmd_lrtest->callback([] {
        PropertyDataset ds = prepare(prep_test);
        Link link;
        if (opt_lrtest.link == "logit") link = Link::logit;
        else if (opt_lrtest.link == "probit") link = Link::probit;
        else throw SpecError("unknown --link '" + opt_lrtest.link + "' (logit, probit)");
        ModelSpec full;
        full.response = opt_lrtest.y;
        full.regressors = expand_regressors(ds, opt_lrtest.x);
        ModelSpec restricted;
        restricted.response = opt_lrtest.y;
        restricted.regressors = expand_regressors(ds, opt_lrtest.x0);
        BinaryFit unres = fit_binary(ds, full, link);
        BinaryFit res = fit_binary(ds, restricted, link);
        LrResult lr = lr_test(unres, res);
        json j{{"lr", to_json(lr)},
               {"unrestricted", to_json(unres)},
               {"restricted", to_json(res)}};
        print_out(j, render_text(lr));
    });

    auto* cmd_hausman = cmd_test->add_subcommand("hausman", "FE vs RE specification test");
    cmd_hausman->add_option("--y", opt_hausman.y, "response column")->required();
    cmd_hausman->add_option("--x", opt_hausman.x, "FE regressors")->required()->delimiter(',');
    cmd_hausman->add_option("--x-re", opt_hausman.x_re, "RE regressors (default: same as --x)")
        ->delimiter(',');
    cmd_hausman->add_option("--unit", opt_hausman.unit, "panel unit column")->required();
    cmd_hausman->add_option("--time", opt_hausman.time, "panel time column")->required();
    cmd_hausman->callback([] {
        PropertyDataset ds = prepare(prep_test);
        PanelIndex index{opt_hausman.unit, opt_hausman.time};
        ModelSpec fe_spec;
        fe_spec.response = opt_hausman.y;
        fe_spec.regressors = expand_regressors(ds, opt_hausman.x);
        ModelSpec re_spec = fe_spec;
        if (!opt_hausman.x_re.empty())
            re_spec.regressors = expand_regressors(ds, opt_hausman.x_re);
        FitResult fe = fit_fe(ds, index, fe_spec);
        FitResult re = fit_re(ds, index, re_spec);
        HausmanResult hr = hausman_test(fe, re);
        json j{{"hausman", to_json(hr)}, {"fe", to_json(fe)}, {"re", to_json(re)}};
        print_out(j, render_text(hr));
    });

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "train/test split and holdout metrics");
    add_prep_opts(cmd_eval, prep_eval);
    cmd_eval->add_option("--y", opt_eval.y, "response column")->required();
    cmd_eval->add_option("--x", opt_eval.x, "regressors")->required()->delimiter(',');
    cmd_eval->add_option("--train-frac", opt_eval.train_frac, "Bernoulli train probability");
    cmd_eval->add_option("--seed", opt_eval.seed, "split RNG seed")->required();
    cmd_eval->add_flag("--exact", opt_eval.exact, "fixed-size split instead of Bernoulli");
    cmd_eval->add_flag("--json", g_json, "emit JSON");
    cmd_eval->callback([] {
        PropertyDataset ds = prepare(prep_eval);
        SplitResult split =
            split_train_test(ds.n_rows(), opt_eval.train_frac, opt_eval.seed, opt_eval.exact);
        PropertyDataset train = subset_rows(ds, split.train);
        ModelSpec spec;
        spec.response = opt_eval.y;
        spec.regressors = expand_regressors(train, opt_eval.x);
        FitResult fit = fit_ols(train, spec);
        Eigen::VectorXd predicted = predict(ds, split.test, fit);
        Eigen::VectorXd actual(static_cast<Eigen::Index>(split.test.size()));
        const auto& resp = ds.column(opt_eval.y);
        for (std::size_t i = 0; i < split.test.size(); ++i) {
            if (std::isnan(resp[split.test[i]]))
                throw DomainError("test row " + std::to_string(split.test[i] + 1) +
                                  " has a missing response");
            actual(static_cast<Eigen::Index>(i)) = resp[split.test[i]];
        }
        EvalReport report = evaluate_predictions(actual, predicted);
        report.n_train = split.train.size();
        report.n_test = split.test.size();
        json j{{"report", to_json(report)}, {"train_fit", to_json(fit)}};
        print_out(j, render_text(report));
    });

    // simulate
    auto* cmd_sim = app.add_subcommand("simulate", "synthetic coastal market generator");
    cmd_sim->add_option("--out", opt_sim.out, "output CSV path")->required();
    cmd_sim->add_option("--n", opt_sim.dgp.n, "number of sales");
    cmd_sim->add_option("--seed", opt_sim.dgp.seed, "generator seed");
    cmd_sim->add_option("--lambda", opt_sim.dgp.lambda, "spatial lag coefficient");
    cmd_sim->add_option("--endogeneity", opt_sim.dgp.endogeneity,
                        "corr of the lnsqft disturbance with the price error");
    cmd_sim->add_option("--instrument-strength", opt_sim.dgp.instrument_strength,
                        "parking -> lnsqft first-stage slope");
    cmd_sim->add_option("--noise-sd", opt_sim.dgp.noise_sd, "price error sd");
    cmd_sim->add_option("--beta0", opt_sim.dgp.beta0, "intercept");
    cmd_sim->add_option("--b-lnsqft", opt_sim.dgp.b_lnsqft, "lnsqft coefficient");
    cmd_sim->add_option("--b-beds", opt_sim.dgp.b_beds, "beds coefficient");
    cmd_sim->add_option("--b-baths", opt_sim.dgp.b_baths, "baths coefficient");
    cmd_sim->add_option("--b-lndist", opt_sim.dgp.b_lndist, "lndist_pch coefficient");
    cmd_sim->add_option("--b-stories", opt_sim.dgp.b_stories, "stories coefficient");
    cmd_sim->add_option("--b-single-family", opt_sim.dgp.b_single_family,
                        "single_family coefficient");
    cmd_sim->add_flag("--json", g_json, "emit JSON");
    cmd_sim->callback([] {
        PropertyDataset ds = simulate_market(opt_sim.dgp);
        write_csv(ds, opt_sim.out);
        json j{{"n_rows", ds.n_rows()}, {"seed", opt_sim.dgp.seed}, {"out", opt_sim.out}};
        std::string text = "Wrote " + std::to_string(ds.n_rows()) + " simulated sales to " +
                           opt_sim.out + "\n";
        print_out(j, text);
    });

    // pipeline
    auto* cmd_pipeline = app.add_subcommand("pipeline", "run the full staged analysis");
    cmd_pipeline->add_option("--config", opt_pipeline.config, "sectioned key = value file")
        ->required();
    cmd_pipeline->add_flag("--validate", opt_pipeline.validate_only,
                           "check the config and stop");
    cmd_pipeline->add_flag("--json", g_json, "emit JSON");
    cmd_pipeline->callback([] {
        PipelineConfig cfg = parse_config(opt_pipeline.config);
        auto problems = validate_config(cfg);
        if (!problems.empty()) {
            std::string msg = "invalid pipeline config:";
            for (const auto& p : problems) msg += "\n  - " + p;
            throw SpecError(msg);
        }
        if (opt_pipeline.validate_only) {
            print_out(json{{"status", "ok"}}, "config ok\n");
            return;
        }
        run_pipeline(cfg);
        print_out(json{{"status", "ok"}, {"output_dir", cfg.output_dir}},
                  "pipeline complete, artifacts in " + cfg.output_dir + "\n");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const spatec::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const spatec::ColumnError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const spatec::SpecError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const spatec::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const spatec::CollinearityError& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return 1;
    } catch (const spatec::EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
