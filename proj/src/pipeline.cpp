#include "spatec/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "spatec/discrete.hpp"
#include "spatec/error.hpp"
#include "spatec/eval.hpp"
#include "spatec/iv.hpp"
#include "spatec/panel.hpp"
#include "spatec/regress.hpp"
#include "spatec/report.hpp"

namespace fs = std::filesystem;

namespace spatec {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_double_token(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

bool parse_u64_token(const std::string& s, std::uint64_t& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

bool parse_int_token(const std::string& s, int& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

const std::set<std::string>& canonical_fields() {
    static const std::set<std::string> fields = {
        "address",  "price",    "sqft",     "lot_sqft",   "beds",
        "baths",    "stories",  "parking",  "style",      "zipcode",
        "year_built", "latitude", "longitude", "sale_year", "sale_month",
        "house_id", "dist_pch"};
    return fields;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot open '" + p.string() + "' for writing");
    out << content;
    if (!out) throw Error("write failed for '" + p.string() + "'");
}

void emit(const fs::path& dir, const std::string& stem, const json& j, const std::string& text) {
    write_file(dir / (stem + ".json"), j.dump(2) + "\n");
    write_file(dir / (stem + ".txt"), text);
}

std::vector<std::string> without(const std::vector<std::string>& names, const std::string& drop) {
    std::vector<std::string> out;
    for (const auto& n : names)
        if (n != drop) out.push_back(n);
    return out;
}

Eigen::MatrixXd coord_matrix(const PropertyDataset& ds, const std::string& lat_col,
                             const std::string& lon_col) {
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(ds.n_rows()), 2);
    coords.col(0) = ds.column_vector(lat_col);
    coords.col(1) = ds.column_vector(lon_col);
    return coords;
}

std::vector<int> int_labels_from(const PropertyDataset& ds, const std::string& column) {
    std::vector<int> labels;
    labels.reserve(ds.n_rows());
    for (double v : ds.column(column)) labels.push_back(static_cast<int>(std::lround(v)));
    return labels;
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

}  // namespace

PipelineConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");

    PipelineConfig cfg;
    auto& problems = cfg.parse_problems;
    std::string section;
    std::string line;
    std::size_t lineno = 0;
    bool output_dir_set = false;

    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                problems.push_back("line " + std::to_string(lineno) + ": malformed section '" +
                                   t + "'");
                section.clear();
                continue;
            }
            section = trim(t.substr(1, t.size() - 2));
            static const std::set<std::string> known = {"data",  "columns", "spatial",
                                                        "model", "eval",    "output"};
            if (!known.count(section)) {
                problems.push_back("unknown config section '[" + section + "]'");
                section = "!skip";
            }
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value, got '" +
                               t + "'");
            continue;
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            problems.push_back("line " + std::to_string(lineno) + ": empty key or value");
            continue;
        }
        if (section == "!skip") continue;

        auto bad_value = [&](const std::string& what) {
            problems.push_back("[" + section + "] " + key + ": cannot parse '" + value + "' as " +
                               what);
        };
        auto unknown_key = [&]() {
            problems.push_back("unknown key '" + key + "' in section [" + section + "]");
        };

        if (section == "data") {
            if (key == "input") cfg.input = value;
            else if (key == "price_threshold") {
                double v;
                if (parse_double_token(value, v)) cfg.price_threshold = v;
                else bad_value("a number");
            } else unknown_key();
        } else if (section == "columns") {
            if (canonical_fields().count(key)) cfg.columns[key] = value;
            else problems.push_back("[columns] '" + key + "' is not a recognized field name");
        } else if (section == "spatial") {
            double v;
            if (key == "ref_lat") {
                if (parse_double_token(value, v)) { cfg.ref_lat = v; cfg.ref_lat_set = true; }
                else bad_value("a number");
            } else if (key == "ref_lon") {
                if (parse_double_token(value, v)) { cfg.ref_lon = v; cfg.ref_lon_set = true; }
                else bad_value("a number");
            } else if (key == "metric") {
                if (value == "degree_euclidean") cfg.metric = DistanceMetric::degree_euclidean;
                else if (value == "haversine_km") cfg.metric = DistanceMetric::haversine_km;
                else bad_value("degree_euclidean or haversine_km");
            } else if (key == "k") {
                int kk;
                if (parse_int_token(value, kk)) cfg.k = kk;
                else bad_value("an integer");
            } else if (key == "linkage") {
                if (value == "ward") cfg.linkage = Linkage::ward;
                else if (value == "complete") cfg.linkage = Linkage::complete;
                else bad_value("ward or complete");
            } else if (key == "cutoff") {
                if (parse_double_token(value, v)) cfg.cutoff = v;
                else bad_value("a number");
            } else unknown_key();
        } else if (section == "model") {
            if (key == "y") cfg.response = value;
            else if (key == "x") cfg.regressors = split_list(value);
            else if (key == "endog") cfg.endogenous = value;
            else if (key == "instr") cfg.instrument = value;
            else if (key == "binary_x") cfg.binary_regressors = split_list(value);
            else unknown_key();
        } else if (section == "eval") {
            if (key == "train_frac") {
                double v;
                if (parse_double_token(value, v)) cfg.train_frac = v;
                else bad_value("a number");
            } else if (key == "seed") {
                std::uint64_t s;
                if (parse_u64_token(value, s)) { cfg.seed = s; cfg.seed_set = true; }
                else bad_value("an unsigned integer");
            } else unknown_key();
        } else if (section == "output") {
            if (key == "dir") { cfg.output_dir = value; output_dir_set = true; }
            else unknown_key();
        } else {
            problems.push_back("line " + std::to_string(lineno) + ": key '" + key +
                               "' appears before any section");
        }
    }

    if (!output_dir_set) {
        const char* env = std::getenv("SPATEC_OUT");
        cfg.output_dir = env != nullptr && *env != '\0' ? env : "spatec_out";
    }
    return cfg;
}

std::vector<std::string> validate_config(const PipelineConfig& config) {
    std::vector<std::string> problems = config.parse_problems;
    if (config.input.empty()) problems.push_back("[data] input is required");
    if (!config.ref_lat_set) problems.push_back("[spatial] ref_lat is required");
    if (!config.ref_lon_set) problems.push_back("[spatial] ref_lon is required");
    if (config.ref_lat_set && (config.ref_lat < -90.0 || config.ref_lat > 90.0))
        problems.push_back("[spatial] ref_lat must lie in [-90, 90]");
    if (config.ref_lon_set && (config.ref_lon < -180.0 || config.ref_lon > 180.0))
        problems.push_back("[spatial] ref_lon must lie in [-180, 180]");
    if (config.k < 2) problems.push_back("[spatial] k must be at least 2");
    if (config.cutoff && !(*config.cutoff > 0.0))
        problems.push_back("[spatial] cutoff must be positive");
    if (!(config.train_frac > 0.0 && config.train_frac < 1.0))
        problems.push_back("[eval] train_frac must lie strictly between 0 and 1");
    if (!config.seed_set) problems.push_back("[eval] seed is required");
    if (config.response.empty()) problems.push_back("[model] y must not be empty");
    if (config.regressors.empty()) problems.push_back("[model] x must not be empty");
    if (config.endogenous.empty()) problems.push_back("[model] endog must not be empty");
    if (config.instrument.empty()) problems.push_back("[model] instr must not be empty");
    if (config.binary_regressors.empty()) problems.push_back("[model] binary_x must not be empty");
    if (config.output_dir.empty()) problems.push_back("[output] dir must not be empty");
    return problems;
}

void run_pipeline(const PipelineConfig& config) {
    {
        auto problems = validate_config(config);
        if (!problems.empty()) {
            std::string msg = "invalid pipeline config:";
            for (const auto& p : problems) msg += "\n  - " + p;
            throw SpecError(msg);
        }
    }
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);

    // 01: load
    LoadResult loaded = load_csv(config.input, config.columns);
    PropertyDataset ds = std::move(loaded.dataset);
    {
        json rejected = json::array();
        for (const auto& r : loaded.rejected)
            rejected.push_back({{"row", r.row}, {"column", r.column}, {"message", r.message}});
        json j{{"input", config.input},
               {"n_rows", ds.n_rows()},
               {"rejected", rejected},
               {"duplicates_dropped", loaded.duplicates_dropped}};
        std::ostringstream text;
        text << "Loaded " << ds.n_rows() << " rows from " << config.input << '\n'
             << "Rejected rows " << loaded.rejected.size() << "   duplicate addresses dropped "
             << loaded.duplicates_dropped << '\n';
        for (const auto& r : loaded.rejected)
            text << "  row " << r.row << " [" << r.column << "] " << r.message << '\n';
        emit(dir, "01_load", j, text.str());
    }
    if (ds.n_rows() < 2) throw DomainError("pipeline needs at least 2 usable rows");

    // 02: transforms (distance, logs, dummies, standardized coordinates)
    bool dist_computed = false;
    if (!ds.has_column("dist_pch")) {
        ds.set_column("dist_pch",
                      distances_to_reference(ds.column("latitude"), ds.column("longitude"),
                                             Point{config.ref_lat, config.ref_lon},
                                             config.metric));
        dist_computed = true;
    }
    double threshold;
    if (config.price_threshold) {
        threshold = *config.price_threshold;
    } else {
        const auto& price = ds.column("price");
        double sum = 0.0;
        for (double v : price) sum += v;
        threshold = sum / static_cast<double>(price.size());
    }
    ds = derive_columns(ds, threshold);
    ds.set_column("std_latitude", standardize(ds.column("latitude")));
    ds.set_column("std_longitude", standardize(ds.column("longitude")));
    {
        json j{{"price_threshold", threshold},
               {"dist_pch_computed", dist_computed},
               {"columns", ds.column_names()}};
        std::ostringstream text;
        text << "pricedummy threshold " << fmt6(threshold) << '\n'
             << "dist_pch " << (dist_computed ? "computed from reference point" : "taken from input")
             << '\n'
             << "columns now " << ds.column_names().size() << '\n';
        emit(dir, "02_transform", j, text.str());
    }

    // 03: descriptive statistics
    {
        std::vector<std::string> cols = {"price",      "sqft",     "lot_sqft",  "beds",
                                         "baths",      "stories",  "parking",   "year_built",
                                         "dist_pch",   "lnprice",  "lnsqft",    "lndist_pch",
                                         "time",       "house_by_year", "pricedummy"};
        DescriptiveStats stats = describe(ds, cols);
        emit(dir, "03_describe", to_json(stats), render_text(stats));
    }

    // 04: correlations among the main model variables
    {
        std::vector<std::string> cols = {"lnprice", "lnsqft", "lndist_pch", "beds",
                                         "baths",   "stories", "parking"};
        Eigen::MatrixXd corr = correlation_matrix(ds, cols);
        emit(dir, "04_correlation", correlation_json(corr, cols), correlation_text(corr, cols));
    }

    // 05: clustering (raw k-means, standardized k-means, hierarchical cut)
    Eigen::MatrixXd raw_coords = coord_matrix(ds, "latitude", "longitude");
    {
        ClusterAssignment km = kmeans(raw_coords, config.k, config.seed);
        ClusterAssignment skm =
            kmeans(coord_matrix(ds, "std_latitude", "std_longitude"), config.k, config.seed + 1);
        Dendrogram den = hclust(raw_coords, config.linkage);
        ClusterAssignment hc = cut_dendrogram(den, config.k);
        attach_cluster(ds, "kmeans_cluster", km, "kmeans_clus");
        attach_cluster(ds, "std_kmeans_cluster", skm, "std_clust");
        attach_cluster(ds, "hier_cluster", hc, "");
        json j{{"k", config.k},
               {"seed", config.seed},
               {"linkage", config.linkage == Linkage::ward ? "ward" : "complete"},
               {"kmeans", to_json(km)},
               {"std_kmeans", to_json(skm)},
               {"hierarchical", to_json(hc)}};
        std::ostringstream text;
        text << "K-means on latitude/longitude, k = " << config.k << '\n'
             << render_text(km) << '\n'
             << "K-means on standardized coordinates\n"
             << render_text(skm) << '\n'
             << (config.linkage == Linkage::ward ? "Ward" : "Complete") << " linkage cut at "
             << config.k << " groups\n"
             << render_text(hc);
        emit(dir, "05_cluster", j, text.str());
        write_file(dir / "05_kmeans_assignments.csv", assignment_csv(km));
        write_file(dir / "05_dendrogram.csv", dendrogram_csv(den));
    }

    // 06: ANOVA of log price across the k-means clusters
    {
        AnovaResult av =
            oneway_anova_bartlett(ds.column(config.response), int_labels_from(ds, "kmeans_cluster"));
        emit(dir, "06_anova", to_json(av), render_text(av));
    }

    // 07: hedonic OLS with cluster-robust errors
    std::vector<std::string> expanded = expand_regressors(ds, config.regressors);
    {
        ModelSpec spec;
        spec.response = config.response;
        spec.regressors = expanded;
        spec.vce = Vce{VceKind::cluster, "kmeans_cluster"};
        FitResult ols = fit_ols(ds, spec);
        emit(dir, "07_ols", to_json(ols),
             render_text(ols, "OLS " + config.response + " (cluster-robust by kmeans_cluster)"));
        write_file(dir / "07_residuals.csv", residuals_csv(ols));
    }

    // 08: the same regression absorbing the cluster fixed effects
    {
        ModelSpec spec;
        spec.response = config.response;
        spec.regressors = expanded;
        spec.absorb = "kmeans_cluster";
        spec.vce = Vce{VceKind::cluster, "kmeans_cluster"};
        FitResult areg = fit_ols(ds, spec);
        emit(dir, "08_areg", to_json(areg),
             render_text(areg, "OLS " + config.response + " absorbing kmeans_cluster"));
    }

    // 09: spatial weights over the raw coordinates
    double cutoff = config.cutoff ? *config.cutoff : median_pairwise_distance(raw_coords);
    SpatialWeightMatrix W = build_weights(raw_coords, cutoff, true);
    {
        json j{{"n", ds.n_rows()},
               {"cutoff", cutoff},
               {"row_standardized", W.row_standardized},
               {"isolated", W.isolated},
               {"digest", W.digest}};
        std::ostringstream text;
        text << "Inverse-distance weights, cutoff " << fmt6(cutoff) << ", row-standardized\n"
             << "isolated rows " << W.isolated.size() << "   digest " << W.digest << '\n';
        emit(dir, "09_weights", j, text.str());
    }

    // 10: 2SLS with the configured instrument
    IvSpec iv;
    iv.response = config.response;
    iv.endogenous = {config.endogenous};
    iv.instruments = {config.instrument};
    iv.exogenous = without(expanded, config.endogenous);
    {
        FitResult tsls = fit_2sls(ds, iv);
        emit(dir, "10_2sls", to_json(tsls),
             render_text(tsls, "2SLS " + config.response + " (" + config.endogenous + " = " +
                                   config.instrument + ")"));
    }

    // 11: weak-instrument diagnostic
    {
        WeakIvReport wk = weak_iv_test(ds, iv);
        emit(dir, "11_weakiv", to_json(wk), render_text(wk));
    }

    // 12: spatial-lag model by GS2SLS on the same structural equation
    {
        IvSpec sar = iv;
        sar.spatial = &W;
        FitResult f = fit_sar_gs2sls(ds, sar);
        emit(dir, "12_sar", to_json(f),
             render_text(f, "GS2SLS spatial lag, " + config.response));
    }

    // 13: logit on the price dummy, with marginal effects at the means
    std::vector<std::string> binary_x = expand_regressors(ds, config.binary_regressors);
    ModelSpec binary_spec;
    binary_spec.response = "pricedummy";
    binary_spec.regressors = binary_x;
    BinaryFit lg = fit_binary(ds, binary_spec, Link::logit);
    {
        json j{{"fit", to_json(lg)}, {"marginal_effects", to_json(marginal_effects(lg))}};
        std::string text = render_text(lg, "Logit pricedummy") + "Marginal effects at means\n" +
                           render_text(marginal_effects(lg));
        emit(dir, "13_logit", j, text);
    }

    // 14: classification table for the logit at the 0.5 threshold
    {
        Eigen::VectorXd actual(lg.fitted_prob.size());
        const auto& pd = ds.column("pricedummy");
        for (Eigen::Index i = 0; i < actual.size(); ++i)
            actual(i) = pd[lg.rows_used[static_cast<std::size_t>(i)]];
        ClassificationMetrics cm = classification_table(lg.fitted_prob, actual, 0.5);
        emit(dir, "14_classification", to_json(cm), render_text(cm));
    }

    // 15: LR test of the logit against the intercept-only model
    {
        ModelSpec null_spec;
        null_spec.response = "pricedummy";
        BinaryFit restricted = fit_binary(ds, null_spec, Link::logit);
        LrResult lr = lr_test(lg, restricted);
        emit(dir, "15_lrtest", to_json(lr), render_text(lr));
    }

    // 16: probit on the same specification
    {
        BinaryFit pb = fit_binary(ds, binary_spec, Link::probit);
        json j{{"fit", to_json(pb)}, {"marginal_effects", to_json(marginal_effects(pb))}};
        std::string text = render_text(pb, "Probit pricedummy") + "Marginal effects at means\n" +
                           render_text(marginal_effects(pb));
        emit(dir, "16_probit", j, text);
    }

    // 17-19: panel estimators. Each address appears once, so the house panel
    // is degenerate by construction; the cluster-as-unit panel is the one
    // the FE/RE/Hausman trio actually runs on.
    PanelIndex cluster_panel{"kmeans_cluster", "house_id"};
    ModelSpec fe_spec;
    fe_spec.response = config.response;
    fe_spec.regressors = expand_regressors(ds, {"lnsqft", "i.year"});
    FitResult fe;
    {
        std::string house_note;
        try {
            fit_fe(ds, PanelIndex{"house_id", "time"}, fe_spec);
            house_note = "house_id panel estimated (repeated sales present)";
        } catch (const EstimationError& e) {
            house_note = e.what();
        }
        fe = fit_fe(ds, cluster_panel, fe_spec);
        json j{{"house_panel_note", house_note}, {"fit", to_json(fe)}};
        std::string text = "house_id panel: " + house_note + "\n\n" +
                           render_text(fe, "Fixed effects within kmeans_cluster");
        emit(dir, "17_fe", j, text);
    }

    // 18: random effects needs between-group degrees of freedom, so the RE
    // equation keeps only the focal regressor
    ModelSpec re_spec;
    re_spec.response = config.response;
    re_spec.regressors = {"lnsqft"};
    FitResult re = fit_re(ds, cluster_panel, re_spec);
    emit(dir, "18_re", to_json(re), render_text(re, "Random effects over kmeans_cluster"));

    // 19: Hausman contrast over the shared coefficients
    {
        HausmanResult hr = hausman_test(fe, re);
        emit(dir, "19_hausman", to_json(hr), render_text(hr));
    }

    // 20: holdout evaluation of the hedonic model
    {
        SplitResult split = split_train_test(ds.n_rows(), config.train_frac, config.seed);
        PropertyDataset train = subset_rows(ds, split.train);
        // expand on the training rows so every dummy actually varies there
        ModelSpec spec;
        spec.response = config.response;
        spec.regressors = expand_regressors(train, config.regressors);
        FitResult fit = fit_ols(train, spec);
        Eigen::VectorXd predicted = predict(ds, split.test, fit);
        Eigen::VectorXd actual(static_cast<Eigen::Index>(split.test.size()));
        const auto& resp = ds.column(config.response);
        for (std::size_t i = 0; i < split.test.size(); ++i)
            actual(static_cast<Eigen::Index>(i)) = resp[split.test[i]];
        EvalReport report = evaluate_predictions(actual, predicted);
        report.n_train = split.train.size();
        report.n_test = split.test.size();
        json j{{"report", to_json(report)}, {"train_fit", to_json(fit)}};
        std::string text = render_text(report) + "\n" +
                           render_text(fit, "Training fit (" + config.response + ")");
        emit(dir, "20_eval", j, text);
    }
}

}  // namespace spatec
