#pragma once

// Shared fixture builders. Every dataset built here passes record validation,
// so tests that want a rejection have to break a field on purpose.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spatec/dataset.hpp"
#include "spatec/eval.hpp"
#include "spatec/rng.hpp"

namespace fixtures {

inline spatec::PropertyRecord base_record(long id) {
    spatec::PropertyRecord r;
    r.house_id = id;
    r.price = 1200000.0;
    r.sqft = 1800.0;
    r.lot_sqft = 4200.0;
    r.beds = 3;
    r.baths = 2.0;
    r.stories = 1;
    r.parking = 2;
    r.style = spatec::HomeStyle::single_family;
    r.zipcode = 92624;
    r.year_built = 1985;
    r.latitude = 33.46;
    r.longitude = -117.70;
    r.sale_year = 2022;
    r.sale_month = 6;
    r.address = std::to_string(id) + " Camino Capistrano";
    return r;
}

// n valid records with mild variation in every numeric field.
inline std::vector<spatec::PropertyRecord> records(std::size_t n, std::uint64_t seed = 99) {
    spatec::Rng rng(seed);
    std::vector<spatec::PropertyRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        spatec::PropertyRecord r = base_record(static_cast<long>(i) + 1);
        r.price = 800000.0 + 900000.0 * rng.uniform();
        r.sqft = 1200.0 + 2200.0 * rng.uniform();
        r.beds = 2 + static_cast<double>(rng.below(4));
        r.baths = 1.0 + 0.5 * static_cast<double>(rng.below(5));
        r.stories = 1 + static_cast<double>(rng.below(2));
        r.parking = static_cast<double>(rng.below(4));
        r.latitude = 33.44 + 0.06 * rng.uniform();
        r.longitude = -117.73 + 0.07 * rng.uniform();
        r.sale_year = 2021 + static_cast<int>(rng.below(4));
        r.sale_month = 1 + static_cast<int>(rng.below(12));
        out.push_back(r);
    }
    return out;
}

// Simulated market with the derived columns attached.
inline spatec::PropertyDataset market(std::size_t n, std::uint64_t seed) {
    spatec::MarketDGP dgp;
    dgp.n = n;
    dgp.seed = seed;
    return spatec::derive_columns(spatec::simulate_market(dgp), 2000000.0);
}

// Writes `body` under a unique name in the temp dir and returns the path.
inline std::string temp_file(const std::string& name, const std::string& body) {
    std::filesystem::path p = std::filesystem::temp_directory_path() / ("spatec_test_" + name);
    std::ofstream out(p);
    out << body;
    return p.string();
}

}  // namespace fixtures
