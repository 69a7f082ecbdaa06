#include "spatec/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace spatec {

namespace {

using nlohmann::json;

json num_or_null(double v) {
    if (std::isnan(v) || std::isinf(v)) return nullptr;
    return v;
}

// left-pads or right-pads cells so every row lines up
std::string table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows)
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (width.size() <= j) width.push_back(0);
            width[j] = std::max(width[j], row[j].size());
        }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            std::string cell = row[j];
            if (j == 0) cell.resize(width[j], ' ');      // names left-aligned
            else cell.insert(0, width[j] - cell.size(), ' ');
            out << cell << (j + 1 == row.size() ? "" : "  ");
        }
        out << '\n';
    }
    return out.str();
}

std::vector<std::vector<std::string>> coef_rows(const std::vector<Coefficient>& coefs,
                                                const std::string& stat_label) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"", "Coef.", "St.Err.", stat_label + "-value", "p-value", "[95% Conf",
                    "Interval]", "Sig"});
    for (const auto& c : coefs)
        rows.push_back({c.name, fmt6(c.estimate), fmt6(c.se), fmt6(c.stat), fmt6(c.p),
                        fmt6(c.ci_low), fmt6(c.ci_high), stars(c.p)});
    return rows;
}

json coef_json(const std::vector<Coefficient>& coefs) {
    json arr = json::array();
    for (const auto& c : coefs)
        arr.push_back({{"name", c.name},
                       {"coef", num_or_null(c.estimate)},
                       {"se", num_or_null(c.se)},
                       {"stat", num_or_null(c.stat)},
                       {"p", num_or_null(c.p)},
                       {"ci_low", num_or_null(c.ci_low)},
                       {"ci_high", num_or_null(c.ci_high)}});
    return arr;
}

constexpr const char* kStarsFootnote = "*** p<.01, ** p<.05, * p<.1";

}  // namespace

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string stars(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    return "";
}

json to_json(const FitResult& fit) {
    json j;
    j["n"] = fit.n;
    j["df_resid"] = fit.df_resid;
    j["df_model"] = fit.df_model;
    j["coefficients"] = coef_json(fit.coefficients);
    if (fit.r2) j["r2"] = num_or_null(*fit.r2);
    j["rmse"] = num_or_null(fit.rmse);
    j["loglik"] = num_or_null(fit.loglik);
    j["aic"] = num_or_null(fit.aic);
    j["bic"] = num_or_null(fit.bic);
    j["stat_label"] = fit.stat_label;
    if (fit.df_absorbed > 0) j["df_absorbed"] = fit.df_absorbed;
    if (fit.lambda) j["lambda"] = num_or_null(*fit.lambda);
    if (fit.lambda_warning) j["lambda_warning"] = true;
    if (fit.pseudo_r2) j["pseudo_r2"] = num_or_null(*fit.pseudo_r2);
    if (fit.weights_digest) j["weights_digest"] = *fit.weights_digest;
    if (fit.theta) j["theta"] = num_or_null(*fit.theta);
    if (fit.theta_min) j["theta_min"] = num_or_null(*fit.theta_min);
    if (fit.theta_max) j["theta_max"] = num_or_null(*fit.theta_max);
    if (fit.sigma_u) j["sigma_u"] = num_or_null(*fit.sigma_u);
    if (fit.sigma_e) j["sigma_e"] = num_or_null(*fit.sigma_e);
    if (fit.sigma_u_clipped) j["sigma_u_clipped"] = true;
    if (!fit.dropped.empty()) j["dropped"] = fit.dropped;
    return j;
}

std::string render_text(const FitResult& fit, const std::string& title) {
    std::ostringstream out;
    out << title << '\n';
    out << table(coef_rows(fit.coefficients, fit.stat_label));
    out << "Observations " << fit.n;
    if (fit.r2) out << "   R-squared " << fmt6(*fit.r2);
    if (fit.pseudo_r2) out << "   Pseudo R2 " << fmt6(*fit.pseudo_r2);
    out << "   RMSE " << fmt6(fit.rmse) << '\n';
    out << "Log-likelihood " << fmt6(fit.loglik) << "   AIC " << fmt6(fit.aic) << "   BIC "
        << fmt6(fit.bic) << '\n';
    if (fit.df_absorbed > 0) out << "Absorbed groups " << fit.df_absorbed << '\n';
    if (fit.lambda) out << "lambda " << fmt6(*fit.lambda)
                        << (fit.lambda_warning ? "   WARNING: |lambda| >= 1" : "") << '\n';
    if (fit.sigma_u)
        out << "sigma_u " << fmt6(*fit.sigma_u) << "   sigma_e " << fmt6(*fit.sigma_e)
            << "   theta " << fmt6(*fit.theta)
            << (fit.sigma_u_clipped ? "   (sigma_u clipped at 0)" : "") << '\n';
    if (!fit.dropped.empty()) {
        out << "Dropped (no within variation):";
        for (const auto& d : fit.dropped) out << ' ' << d;
        out << '\n';
    }
    out << kStarsFootnote << '\n';
    return out.str();
}

json to_json(const BinaryFit& fit) {
    json j;
    j["link"] = fit.link == Link::logit ? "logit" : "probit";
    j["n"] = fit.n;
    j["coefficients"] = coef_json(fit.coefficients);
    j["loglik"] = num_or_null(fit.loglik);
    j["loglik_null"] = num_or_null(fit.loglik_null);
    j["pseudo_r2"] = num_or_null(fit.pseudo_r2);
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    return j;
}

std::string render_text(const BinaryFit& fit, const std::string& title) {
    std::ostringstream out;
    out << title << '\n';
    out << table(coef_rows(fit.coefficients, "z"));
    out << "Observations " << fit.n << "   Pseudo r-squared " << fmt6(fit.pseudo_r2) << '\n';
    out << "Log-likelihood " << fmt6(fit.loglik) << "   Null log-likelihood "
        << fmt6(fit.loglik_null) << "   Iterations " << fit.iterations << '\n';
    out << kStarsFootnote << '\n';
    return out.str();
}

json to_json(const AnovaResult& r) {
    json j;
    j["ss_between"] = num_or_null(r.ss_between);
    j["ss_within"] = num_or_null(r.ss_within);
    j["df_between"] = r.df_between;
    j["df_within"] = r.df_within;
    j["f"] = num_or_null(r.f);
    j["p_f"] = num_or_null(r.p_f);
    if (r.bartlett_chi2) {
        j["bartlett_chi2"] = num_or_null(*r.bartlett_chi2);
        j["bartlett_df"] = *r.bartlett_df;
        j["p_bartlett"] = num_or_null(*r.p_bartlett);
    }
    if (r.bartlett_note) j["bartlett_note"] = *r.bartlett_note;
    return j;
}

std::string render_text(const AnovaResult& r) {
    std::ostringstream out;
    out << table({{"", "SS", "df", "MS"},
                  {"Between groups", fmt6(r.ss_between), std::to_string(r.df_between),
                   fmt6(r.ss_between / static_cast<double>(r.df_between))},
                  {"Within groups", fmt6(r.ss_within), std::to_string(r.df_within),
                   fmt6(r.ss_within / static_cast<double>(r.df_within))}});
    out << "F(" << r.df_between << ", " << r.df_within << ") = " << fmt6(r.f)
        << "   Prob > F = " << fmt6(r.p_f) << '\n';
    if (r.bartlett_chi2)
        out << "Bartlett's equal-variances test: chi2(" << *r.bartlett_df << ") = "
            << fmt6(*r.bartlett_chi2) << "   Prob > chi2 = " << fmt6(*r.p_bartlett) << '\n';
    if (r.bartlett_note) out << *r.bartlett_note << '\n';
    return out.str();
}

json to_json(const WeakIvReport& r) {
    json j;
    j["stat"] = num_or_null(r.stat);
    j["n"] = r.n;
    j["n_endogenous"] = r.n_endogenous;
    j["n_instruments"] = r.n_instruments;
    json cv = json::object();
    for (const auto& [size, v] : r.critical_values) cv[fmt6(size)] = v;
    j["critical_values"] = cv;
    if (r.conclusion) {
        j["conclusion"] = *r.conclusion;
        j["size"] = r.size;
    }
    return j;
}

std::string render_text(const WeakIvReport& r) {
    std::ostringstream out;
    out << "Minimum eigenvalue statistic = " << fmt6(r.stat) << '\n';
    if (!r.critical_values.empty()) {
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> head{"2SLS size of nominal 5% Wald test"};
        std::vector<std::string> vals{"critical value"};
        for (const auto& [size, v] : r.critical_values) {
            head.push_back(fmt6(size * 100.0) + "%");
            vals.push_back(fmt6(v));
        }
        out << table({head, vals});
        out << "H0: instruments are weak; conclusion at " << fmt6(r.size * 100.0)
            << "% size: " << *r.conclusion << '\n';
    }
    return out.str();
}

json to_json(const ClassificationMetrics& m) {
    json j;
    j["tp"] = m.table.tp;
    j["fp"] = m.table.fp;
    j["fn"] = m.table.fn;
    j["tn"] = m.table.tn;
    j["threshold"] = m.table.threshold;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = num_or_null(*v);
    };
    put("sensitivity", m.sensitivity);
    put("specificity", m.specificity);
    put("ppv", m.ppv);
    put("npv", m.npv);
    put("false_pos_true_neg", m.false_pos_true_neg);
    put("false_neg_true_pos", m.false_neg_true_pos);
    put("false_pos_classified", m.false_pos_classified);
    put("false_neg_classified", m.false_neg_classified);
    put("accuracy", m.accuracy);
    return j;
}

std::string render_text(const ClassificationMetrics& m) {
    std::ostringstream out;
    const auto& t = m.table;
    out << table({{"Classified", "D", "~D", "Total"},
                  {"+", std::to_string(t.tp), std::to_string(t.fp), std::to_string(t.tp + t.fp)},
                  {"-", std::to_string(t.fn), std::to_string(t.tn), std::to_string(t.fn + t.tn)},
                  {"Total", std::to_string(t.tp + t.fn), std::to_string(t.fp + t.tn),
                   std::to_string(t.tp + t.fp + t.fn + t.tn)}});
    out << "Classified + if predicted Pr(D) >= " << fmt6(t.threshold) << '\n';
    auto pct = [](const std::optional<double>& v) {
        return v ? fmt6(*v * 100.0) + "%" : std::string("undefined");
    };
    out << table({{"Sensitivity", "Pr(+| D)", pct(m.sensitivity)},
                  {"Specificity", "Pr(-|~D)", pct(m.specificity)},
                  {"Positive predictive value", "Pr(D| +)", pct(m.ppv)},
                  {"Negative predictive value", "Pr(~D| -)", pct(m.npv)},
                  {"False + rate for true ~D", "Pr(+|~D)", pct(m.false_pos_true_neg)},
                  {"False - rate for true D", "Pr(-| D)", pct(m.false_neg_true_pos)},
                  {"False + rate for classified +", "Pr(~D| +)", pct(m.false_pos_classified)},
                  {"False - rate for classified -", "Pr(D| -)", pct(m.false_neg_classified)},
                  {"Correctly classified", "", pct(m.accuracy)}});
    return out.str();
}

json to_json(const EvalReport& r) {
    json j;
    j["n_train"] = r.n_train;
    j["n_test"] = r.n_test;
    j["rmse"] = num_or_null(r.rmse);
    j["mae"] = num_or_null(r.mae);
    if (r.r2_corr) j["r2_corr"] = num_or_null(*r.r2_corr);
    if (r.r2_ss) j["r2_ss"] = num_or_null(*r.r2_ss);
    if (r.r2_note) j["r2_note"] = *r.r2_note;
    j["resid_mean"] = num_or_null(r.resid_mean);
    j["resid_sd"] = num_or_null(r.resid_sd);
    j["resid_skew"] = num_or_null(r.resid_skew);
    return j;
}

std::string render_text(const EvalReport& r) {
    std::ostringstream out;
    out << "Train obs " << r.n_train << "   Test obs " << r.n_test << '\n';
    out << "RMSE = " << fmt6(r.rmse) << '\n';
    out << "MAE = " << fmt6(r.mae) << '\n';
    if (r.r2_corr) out << "R-squared (corr^2) = " << fmt6(*r.r2_corr) << '\n';
    if (r.r2_ss) out << "R-squared (1 - SSR/SST) = " << fmt6(*r.r2_ss) << '\n';
    if (r.r2_note) out << r.r2_note.value() << '\n';
    out << "Residuals: mean " << fmt6(r.resid_mean) << "  sd " << fmt6(r.resid_sd) << "  skew "
        << fmt6(r.resid_skew) << '\n';
    return out.str();
}

json to_json(const MonteCarloSummary& s) {
    json j;
    j["reps"] = s.reps;
    j["failures"] = s.failures;
    auto put_map = [&](const char* key, const std::map<std::string, double>& m) {
        json o = json::object();
        for (const auto& [k, v] : m) o[k] = num_or_null(v);
        j[key] = o;
    };
    put_map("mean_estimate", s.mean_estimate);
    put_map("mean_bias", s.mean_bias);
    put_map("mc_se", s.mc_se);
    put_map("coverage95", s.coverage95);
    put_map("rejection_rate", s.rejection_rate);
    return j;
}

std::string render_text(const MonteCarloSummary& s) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"", "mean", "bias", "mc se", "coverage95", "rejection"});
    for (const auto& [name, mean] : s.mean_estimate)
        rows.push_back({name, fmt6(mean), fmt6(s.mean_bias.at(name)), fmt6(s.mc_se.at(name)),
                        fmt6(s.coverage95.at(name)), fmt6(s.rejection_rate.at(name))});
    std::ostringstream out;
    out << table(rows);
    out << "Replications " << s.reps << "   failures " << s.failures << '\n';
    return out.str();
}

json to_json(const DescriptiveStats& s) {
    json arr = json::array();
    for (const auto& c : s.columns)
        arr.push_back({{"name", c.name},
                       {"n", c.n},
                       {"mean", num_or_null(c.mean)},
                       {"sd", num_or_null(c.sd)},
                       {"min", num_or_null(c.min)},
                       {"max", num_or_null(c.max)}});
    return json{{"columns", arr}};
}

std::string render_text(const DescriptiveStats& s) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Variable", "Obs", "Mean", "Std.Dev.", "Min", "Max"});
    for (const auto& c : s.columns)
        rows.push_back({c.name, std::to_string(c.n), fmt6(c.mean), fmt6(c.sd), fmt6(c.min),
                        fmt6(c.max)});
    return table(rows);
}

json to_json(const ClusterAssignment& a) {
    json j;
    j["k"] = a.k;
    j["labels"] = a.labels;
    j["within_ss"] = num_or_null(a.within_ss);
    if (!a.wss_trace.empty()) j["wss_trace"] = a.wss_trace;
    if (a.centroids.size() > 0) {
        json c = json::array();
        for (Eigen::Index i = 0; i < a.centroids.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < a.centroids.cols(); ++k) row.push_back(a.centroids(i, k));
            c.push_back(row);
        }
        j["centroids"] = c;
    }
    return j;
}

std::string render_text(const ClusterAssignment& a) {
    std::vector<long> sizes(static_cast<std::size_t>(a.k), 0);
    for (int l : a.labels) ++sizes[static_cast<std::size_t>(l - 1)];
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Cluster", "Freq."});
    for (int c = 0; c < a.k; ++c)
        rows.push_back({std::to_string(c + 1), std::to_string(sizes[static_cast<std::size_t>(c)])});
    std::ostringstream out;
    out << table(rows);
    out << "Total within-cluster SS " << fmt6(a.within_ss) << '\n';
    return out.str();
}

json to_json(const Dendrogram& d) {
    json merges = json::array();
    for (const auto& m : d.merges)
        merges.push_back(
            {{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
    return json{{"n_leaves", d.n_leaves}, {"merges", merges}};
}

json to_json(const LrResult& r) {
    return json{{"chi2", num_or_null(r.chi2)}, {"df", r.df}, {"p", num_or_null(r.p)}};
}

std::string render_text(const LrResult& r) {
    std::ostringstream out;
    out << "LR chi2(" << r.df << ") = " << fmt6(r.chi2) << "   Prob > chi2 = " << fmt6(r.p)
        << '\n';
    return out.str();
}

json to_json(const HausmanResult& r) {
    return json{{"H", num_or_null(r.H)},
                {"df", r.df},
                {"p", num_or_null(r.p)},
                {"compared", r.compared}};
}

std::string render_text(const HausmanResult& r) {
    std::ostringstream out;
    out << "Hausman H = " << fmt6(r.H) << "   chi2 df = " << r.df << "   Prob > chi2 = "
        << fmt6(r.p) << '\n';
    return out.str();
}

json to_json(const FracPolyResult& r) {
    json searched = json::array();
    for (const auto& [powers, dev] : r.searched)
        searched.push_back({{"powers", powers}, {"deviance", num_or_null(dev)}});
    json j;
    j["powers"] = r.powers;
    j["deviance"] = num_or_null(r.deviance);
    j["n_candidates"] = r.searched.size();
    j["fit"] = to_json(r.fit);
    j["searched"] = searched;
    return j;
}

std::string render_text(const FracPolyResult& r) {
    std::ostringstream out;
    out << "Best powers among " << r.searched.size() << " models fit:";
    for (double p : r.powers) out << ' ' << fmt6(p);
    out << "   deviance " << fmt6(r.deviance) << '\n';
    out << render_text(r.fit, "Selected model");
    return out.str();
}

json to_json(const std::vector<MarginalEffect>& me) {
    json arr = json::array();
    for (const auto& m : me) arr.push_back({{"name", m.name}, {"dydx", num_or_null(m.dydx)}});
    return arr;
}

std::string render_text(const std::vector<MarginalEffect>& me) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Variable", "dy/dx"});
    for (const auto& m : me) rows.push_back({m.name, fmt6(m.dydx)});
    return table(rows);
}

json correlation_json(const Eigen::MatrixXd& corr, const std::vector<std::string>& names) {
    json m = json::array();
    for (Eigen::Index i = 0; i < corr.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < corr.cols(); ++k) row.push_back(corr(i, k));
        m.push_back(row);
    }
    return json{{"names", names}, {"matrix", m}};
}

std::string correlation_text(const Eigen::MatrixXd& corr, const std::vector<std::string>& names) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"Variables"};
    for (const auto& n : names) head.push_back(n);
    rows.push_back(head);
    for (Eigen::Index i = 0; i < corr.rows(); ++i) {
        std::vector<std::string> row{names[static_cast<std::size_t>(i)]};
        for (Eigen::Index k = 0; k < corr.cols(); ++k) row.push_back(fmt6(corr(i, k)));
        rows.push_back(row);
    }
    return table(rows);
}

std::string assignment_csv(const ClusterAssignment& a) {
    std::ostringstream out;
    out << "leaf,label\n";
    for (std::size_t i = 0; i < a.labels.size(); ++i) out << i << ',' << a.labels[i] << '\n';
    return out.str();
}

std::string dendrogram_csv(const Dendrogram& d) {
    std::ostringstream out;
    out << "step,left,right,height,size\n";
    for (std::size_t i = 0; i < d.merges.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.17g", d.merges[i].height);
        out << i << ',' << d.merges[i].left << ',' << d.merges[i].right << ',' << buf << ','
            << d.merges[i].size << '\n';
    }
    return out.str();
}

std::string residuals_csv(const FitResult& fit) {
    std::ostringstream out;
    out << "row,fitted,residual\n";
    for (Eigen::Index i = 0; i < fit.residuals.size(); ++i) {
        char f[48], r[48];
        std::snprintf(f, sizeof(f), "%.17g", fit.fitted(i));
        std::snprintf(r, sizeof(r), "%.17g", fit.residuals(i));
        std::size_t row = fit.rows_used.empty() ? static_cast<std::size_t>(i)
                                                : fit.rows_used[static_cast<std::size_t>(i)];
        out << row << ',' << f << ',' << r << '\n';
    }
    return out.str();
}

}  // namespace spatec
