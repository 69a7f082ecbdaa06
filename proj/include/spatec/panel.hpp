#pragma once

#include <string>

#include "spatec/regress.hpp"

namespace spatec {

struct PanelIndex {
    std::string unit;  // column name
    std::string time;  // column name; (unit, time) pairs must be unique
};

// Within estimator: unit demeaning, zero-within-variance regressors dropped and
// reported via FitResult::dropped.
FitResult fit_fe(const PropertyDataset& ds, const PanelIndex& index, const ModelSpec& spec);

// Swamy-Arora random effects. theta/sigma_u/sigma_e land in the FitResult
// extensions; a negative sigma_u^2 estimate is clipped to 0 and flagged.
FitResult fit_re(const PropertyDataset& ds, const PanelIndex& index, const ModelSpec& spec);

struct HausmanResult {
    double H = 0.0;
    long df = 0;
    double p = 1.0;
    std::vector<std::string> compared;  // common slope names in the order used
};

// H = d' (V_fe - V_re)^+ d over the common slopes, pseudo-inverse built from
// the positive eigenvalues only, so H >= 0 by construction.
HausmanResult hausman_test(const FitResult& fe, const FitResult& re);

}  // namespace spatec
