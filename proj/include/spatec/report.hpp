#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "spatec/dataset.hpp"
#include "spatec/discrete.hpp"
#include "spatec/eval.hpp"
#include "spatec/iv.hpp"
#include "spatec/panel.hpp"
#include "spatec/regress.hpp"
#include "spatec/spatial.hpp"

namespace spatec {

// 6 significant digits, the text-table precision
std::string fmt6(double v);

// "***" p < .01, "**" p < .05, "*" p < .1, "" otherwise
std::string stars(double p);

nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const BinaryFit& fit);
nlohmann::json to_json(const AnovaResult& r);
nlohmann::json to_json(const WeakIvReport& r);
nlohmann::json to_json(const ClassificationMetrics& m);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const MonteCarloSummary& s);
nlohmann::json to_json(const DescriptiveStats& s);
nlohmann::json to_json(const ClusterAssignment& a);
nlohmann::json to_json(const Dendrogram& d);
nlohmann::json to_json(const LrResult& r);
nlohmann::json to_json(const HausmanResult& r);
nlohmann::json to_json(const FracPolyResult& r);
nlohmann::json to_json(const std::vector<MarginalEffect>& me);
nlohmann::json correlation_json(const Eigen::MatrixXd& corr,
                                const std::vector<std::string>& names);

std::string render_text(const FitResult& fit, const std::string& title);
std::string render_text(const BinaryFit& fit, const std::string& title);
std::string render_text(const AnovaResult& r);
std::string render_text(const WeakIvReport& r);
std::string render_text(const ClassificationMetrics& m);
std::string render_text(const EvalReport& r);
std::string render_text(const MonteCarloSummary& s);
std::string render_text(const DescriptiveStats& s);
std::string render_text(const ClusterAssignment& a);
std::string render_text(const LrResult& r);
std::string render_text(const HausmanResult& r);
std::string render_text(const FracPolyResult& r);
std::string render_text(const std::vector<MarginalEffect>& me);
std::string correlation_text(const Eigen::MatrixXd& corr,
                             const std::vector<std::string>& names);

// plot-ready CSV series
std::string assignment_csv(const ClusterAssignment& a);
std::string dendrogram_csv(const Dendrogram& d);
std::string residuals_csv(const FitResult& fit);

}  // namespace spatec
