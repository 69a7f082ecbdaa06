#include <cmath>
#include <map>
#include <set>
#include <vector>

#include <doctest.h>

#include "spatec/distributions.hpp"
#include "spatec/error.hpp"
#include "spatec/rng.hpp"
#include "spatec/spatial.hpp"

using namespace spatec;

namespace {
Eigen::MatrixXd pts(std::initializer_list<std::pair<double, double>> list) {
    Eigen::MatrixXd m(static_cast<long>(list.size()), 2);
    long i = 0;
    for (const auto& [a, b] : list) {
        m(i, 0) = a;
        m(i, 1) = b;
        ++i;
    }
    return m;
}

// direct within-cluster sum of squares for a given labeling
double wss_of(const Eigen::MatrixXd& coords, const std::vector<int>& labels, int k) {
    double total = 0.0;
    for (int c = 1; c <= k; ++c) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(coords.cols());
        double n = 0.0;
        for (long i = 0; i < coords.rows(); ++i)
            if (labels[static_cast<std::size_t>(i)] == c) {
                mean += coords.row(i);
                n += 1.0;
            }
        if (n == 0.0) continue;
        mean /= n;
        for (long i = 0; i < coords.rows(); ++i)
            if (labels[static_cast<std::size_t>(i)] == c)
                total += (coords.row(i) - mean).squaredNorm();
    }
    return total;
}
}  // namespace

TEST_SUITE("spatial") {

TEST_CASE("point distance in both metrics") {
    CHECK(point_distance({3.0, 4.0}, {0.0, 0.0}, DistanceMetric::degree_euclidean) == 5.0);
    // one degree of latitude on the equatorial great circle
    double km = point_distance({1.0, 0.0}, {0.0, 0.0}, DistanceMetric::haversine_km);
    CHECK(km == doctest::Approx(111.195).epsilon(1e-3));
    CHECK(point_distance({33.0, -117.0}, {33.0, -117.0}, DistanceMetric::haversine_km) == 0.0);
}

TEST_CASE("kmeans labels, centroids and trace") {
    Rng rng(140);
    Eigen::MatrixXd coords(40, 2);
    for (long i = 0; i < 40; ++i) {
        coords(i, 0) = rng.uniform() * 4.0;
        coords(i, 1) = rng.uniform() * 4.0;
    }
    ClusterAssignment a = kmeans(coords, 3, 7);
    REQUIRE(a.labels.size() == 40);
    std::set<int> seen(a.labels.begin(), a.labels.end());
    CHECK(*seen.begin() >= 1);
    CHECK(*seen.rbegin() <= 3);
    CHECK(seen.size() == 3);  // no empty cluster survives
    for (std::size_t t = 1; t < a.wss_trace.size(); ++t)
        CHECK(a.wss_trace[t] <= a.wss_trace[t - 1] + 1e-12);
    CHECK(a.within_ss == doctest::Approx(wss_of(coords, a.labels, 3)).epsilon(1e-10));
    // centroid equals the mean of its members
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(2);
    double n1 = 0.0;
    for (long i = 0; i < 40; ++i)
        if (a.labels[static_cast<std::size_t>(i)] == 1) {
            m += coords.row(i);
            n1 += 1.0;
        }
    m /= n1;
    CHECK(a.centroids.row(0).isApprox(m, 1e-12));

    ClusterAssignment again = kmeans(coords, 3, 7);
    CHECK(again.labels == a.labels);  // same seed, same answer
}

TEST_CASE("kmeans rejects bad k") {
    Eigen::MatrixXd coords = pts({{0, 0}, {1, 1}, {2, 2}});
    CHECK_THROWS_AS(kmeans(coords, 0, 1), DomainError);
    CHECK_THROWS_AS(kmeans(coords, 4, 1), DomainError);
}

TEST_CASE("hclust hand-checked heights on the two-pair fixture") {
    // two tight pairs 10 apart: complete merges at 1, 1, sqrt(101);
    // ward reports squared units: 1, 1, 200
    Eigen::MatrixXd coords = pts({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
    Dendrogram complete = hclust(coords, Linkage::complete);
    REQUIRE(complete.merges.size() == 3);
    CHECK(complete.merges[0].height == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(complete.merges[1].height == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(complete.merges[2].height == doctest::Approx(std::sqrt(101.0)).epsilon(1e-12));

    Dendrogram ward = hclust(coords, Linkage::ward);
    REQUIRE(ward.merges.size() == 3);
    CHECK(ward.merges[0].height == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ward.merges[1].height == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ward.merges[2].height == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(ward.merges[2].size == 4);

    ClusterAssignment cut = cut_dendrogram(ward, 2);
    CHECK(cut.labels == std::vector<int>{1, 1, 2, 2});  // first-appearance order
}

TEST_CASE("hclust heights never decrease") {
    Rng rng(141);
    Eigen::MatrixXd coords(25, 2);
    for (long i = 0; i < 25; ++i) {
        coords(i, 0) = rng.uniform();
        coords(i, 1) = rng.uniform();
    }
    for (Linkage lk : {Linkage::ward, Linkage::complete}) {
        Dendrogram d = hclust(coords, lk);
        REQUIRE(d.merges.size() == 24);
        for (std::size_t t = 1; t < d.merges.size(); ++t)
            CHECK(d.merges[t].height >= d.merges[t - 1].height - 1e-9);
        ClusterAssignment all = cut_dendrogram(d, 25);
        std::set<int> uniq(all.labels.begin(), all.labels.end());
        CHECK(uniq.size() == 25);  // cutting at n leaves singletons
        ClusterAssignment one = cut_dendrogram(d, 1);
        for (int lab : one.labels) CHECK(lab == 1);
    }
}

TEST_CASE("inverse-distance weights on a hand fixture") {
    // 3-4-5 spacing: d01 = d12 = 5, d02 = 10 which the cutoff excludes
    Eigen::MatrixXd coords = pts({{0, 0}, {3, 4}, {6, 8}});
    SpatialWeightMatrix raw = build_weights(coords, 6.0, false);
    CHECK(raw.w(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(raw.w(1, 2) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(raw.w(0, 2) == 0.0);
    CHECK(raw.w(0, 0) == 0.0);
    CHECK(!raw.row_standardized);

    SpatialWeightMatrix rs = build_weights(coords, 6.0, true);
    CHECK(rs.row_standardized);
    CHECK(rs.w(0, 1) == 1.0);
    CHECK(rs.w(1, 0) == 0.5);
    CHECK(rs.w(1, 2) == 0.5);
    for (long i = 0; i < 3; ++i) CHECK(rs.w.row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rs.isolated.empty());
    CHECK(!rs.digest.empty());
    CHECK(build_weights(coords, 6.0, true).digest == rs.digest);
    CHECK(build_weights(coords, 11.0, true).digest != rs.digest);
}

TEST_CASE("isolated rows and coincident points") {
    Eigen::MatrixXd coords = pts({{0, 0}, {1, 0}, {50, 50}});
    SpatialWeightMatrix w = build_weights(coords, 2.0, true);
    REQUIRE(w.isolated.size() == 1);
    CHECK(w.isolated[0] == 2);
    CHECK(w.w.row(2).sum() == 0.0);

    Eigen::MatrixXd dup = pts({{1, 1}, {1, 1}, {2, 2}});
    CHECK_THROWS_AS(build_weights(dup, 5.0, true), DomainError);
}

TEST_CASE("median pairwise distance") {
    Eigen::MatrixXd coords = pts({{0, 0}, {3, 4}, {6, 8}});
    CHECK(median_pairwise_distance(coords) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("anova equals a direct two-way decomposition") {
    Rng rng(142);
    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::vector<double>> groups(3);
    for (int g = 0; g < 3; ++g)
        for (int i = 0; i < 8 + 3 * g; ++i) {
            double v = rng.normal() + 0.4 * g;
            groups[static_cast<std::size_t>(g)].push_back(v);
            values.push_back(v);
            labels.push_back(g + 1);
        }
    AnovaResult r = oneway_anova_bartlett(values, labels);

    double grand = 0.0;
    for (double v : values) grand += v;
    grand /= static_cast<double>(values.size());
    double ssb = 0.0, ssw = 0.0, sst = 0.0;
    for (const auto& g : groups) {
        double m = 0.0;
        for (double v : g) m += v;
        m /= static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double v : g) ssw += (v - m) * (v - m);
    }
    for (double v : values) sst += (v - grand) * (v - grand);

    CHECK(r.ss_between == doctest::Approx(ssb).epsilon(1e-12));
    CHECK(r.ss_within == doctest::Approx(ssw).epsilon(1e-12));
    CHECK(r.ss_between + r.ss_within == doctest::Approx(sst).epsilon(1e-12));
    CHECK(r.df_between == 2);
    CHECK(r.df_within == static_cast<long>(values.size()) - 3);
    double f = (ssb / 2.0) / (ssw / static_cast<double>(r.df_within));
    CHECK(r.f == doctest::Approx(f).epsilon(1e-12));
    CHECK(r.p_f == doctest::Approx(f_sf(f, 2, static_cast<double>(r.df_within))).epsilon(1e-12));
}

TEST_CASE("anova from published sums reproduces the reference F") {
    AnovaResult r = anova_f_from_sums(51.2209612, 2, 195.856156, 617);
    CHECK(r.f == doctest::Approx(80.67995845992198).epsilon(1e-12));
    CHECK(r.p_f < 1e-30);
}

TEST_CASE("bartlett is undefined with a singleton group") {
    std::vector<double> values{1.0, 2.0, 3.0, 4.0, 9.0};
    std::vector<int> labels{1, 1, 2, 2, 3};
    AnovaResult r = oneway_anova_bartlett(values, labels);
    CHECK(!r.bartlett_chi2.has_value());
    CHECK(r.bartlett_note.has_value());
}

TEST_CASE("anova needs at least two groups") {
    std::vector<double> values{1.0, 2.0, 3.0};
    std::vector<int> labels{1, 1, 1};
    CHECK_THROWS_AS(oneway_anova_bartlett(values, labels), DomainError);
}

}  // TEST_SUITE
