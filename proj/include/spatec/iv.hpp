#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spatec/regress.hpp"
#include "spatec/spatial.hpp"

namespace spatec {

struct IvSpec {
    std::string response;
    std::vector<std::string> endogenous;
    std::vector<std::string> instruments;  // excluded instruments
    std::vector<std::string> exogenous;    // included controls
    bool intercept = true;
    const SpatialWeightMatrix* spatial = nullptr;  // required by fit_sar_gs2sls
};

// beta = (X'Pz X)^-1 X'Pz y with Z = [instruments, exogenous], X = [endogenous,
// exogenous]; classical IV covariance from structural residuals (sigma^2 = SSR/n,
// z statistics).
FitResult fit_2sls(const PropertyDataset& ds, const IvSpec& spec);

struct WeakIvReport {
    double stat = 0.0;  // Cragg-Donald minimum eigenvalue
    double size = 0.10;
    std::map<double, double> critical_values;  // nominal size -> threshold
    std::optional<std::string> conclusion;     // "strong" or "weak" when a table applies
    long n = 0;
    long n_endogenous = 0;
    long n_instruments = 0;
};

WeakIvReport weak_iv_test(const PropertyDataset& ds, const IvSpec& spec, double size = 0.10);

// Spatial-lag model y = lambda*W*y + X*beta + u estimated by generalized spatial
// 2SLS with instruments [Z, WZ, W^2 Z].
FitResult fit_sar_gs2sls(const PropertyDataset& ds, const IvSpec& spec);

}  // namespace spatec
