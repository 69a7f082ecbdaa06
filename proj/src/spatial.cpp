#include "spatec/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "spatec/distributions.hpp"
#include "spatec/rng.hpp"

namespace spatec {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kPi = 3.14159265358979323846;

double sq(double x) { return x * x; }

// 64-bit FNV-1a over the raw bytes of the matrix entries, row-major.
std::string fnv_digest(const Eigen::MatrixXd& m) {
    std::uint64_t h = 1469598103934665603ULL;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double total_wss(const Eigen::MatrixXd& coords, const std::vector<int>& assign,
                 const Eigen::MatrixXd& centroids) {
    double wss = 0.0;
    for (Eigen::Index i = 0; i < coords.rows(); ++i)
        wss += (coords.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
    return wss;
}

}  // namespace

double point_distance(const Point& p, const Point& ref, DistanceMetric metric) {
    if (metric == DistanceMetric::degree_euclidean)
        return std::sqrt(sq(p.latitude - ref.latitude) + sq(p.longitude - ref.longitude));
    double lat1 = p.latitude * kPi / 180.0;
    double lat2 = ref.latitude * kPi / 180.0;
    double dlat = lat2 - lat1;
    double dlon = (ref.longitude - p.longitude) * kPi / 180.0;
    double a = sq(std::sin(dlat / 2.0)) + std::cos(lat1) * std::cos(lat2) * sq(std::sin(dlon / 2.0));
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<double> distances_to_reference(const std::vector<double>& latitude,
                                           const std::vector<double>& longitude, const Point& ref,
                                           DistanceMetric metric) {
    if (latitude.size() != longitude.size())
        throw DomainError("latitude and longitude lengths differ");
    std::vector<double> out(latitude.size());
    for (std::size_t i = 0; i < latitude.size(); ++i)
        out[i] = point_distance({latitude[i], longitude[i]}, ref, metric);
    return out;
}

ClusterAssignment kmeans(const Eigen::MatrixXd& coords, int k, std::uint64_t seed) {
    const Eigen::Index n = coords.rows();
    if (k < 1) throw DomainError("kmeans: k must be at least 1");
    std::set<std::vector<double>> distinct;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> row(coords.cols());
        for (Eigen::Index j = 0; j < coords.cols(); ++j) row[static_cast<std::size_t>(j)] = coords(i, j);
        distinct.insert(std::move(row));
    }
    if (static_cast<std::size_t>(k) > distinct.size())
        throw DomainError("kmeans: k = " + std::to_string(k) + " exceeds " +
                          std::to_string(distinct.size()) + " distinct points");

    // Greedy farthest-point seeding. First centroid comes from the RNG, the
    // rest maximize the distance to the nearest already-chosen centroid.
    Rng rng(seed);
    std::vector<Eigen::Index> centers;
    centers.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        for (Eigen::Index i = 0; i < n; ++i)
            min_d2(i) = std::min(min_d2(i), (coords.row(i) - coords.row(centers.back())).squaredNorm());
        Eigen::Index best = 0;
        double best_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (min_d2(i) > best_d) {
                best_d = min_d2(i);
                best = i;
            }
        centers.push_back(best);
    }

    Eigen::MatrixXd centroids(k, coords.cols());
    for (int c = 0; c < k; ++c) centroids.row(c) = coords.row(centers[static_cast<std::size_t>(c)]);

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    std::vector<double> trace;
    const int kMaxIter = 100;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (coords.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                double d = (coords.row(i) - centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        // An emptied cluster steals the point farthest from its own centroid.
        for (int c = 0; c < k; ++c) {
            if (std::count(assign.begin(), assign.end(), c) > 0) continue;
            Eigen::Index worst = 0;
            double worst_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                double d = (coords.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > worst_d && std::count(assign.begin(), assign.end(),
                                              assign[static_cast<std::size_t>(i)]) > 1) {
                    worst_d = d;
                    worst = i;
                }
            }
            assign[static_cast<std::size_t>(worst)] = c;
            centroids.row(c) = coords.row(worst);  // keeps the wss trace non-increasing
            changed = true;
        }
        trace.push_back(total_wss(coords, assign, centroids));
        if (!changed) break;
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(coords.cols());
            long cnt = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (assign[static_cast<std::size_t>(i)] == c) {
                    sum += coords.row(i);
                    ++cnt;
                }
            centroids.row(c) = sum / static_cast<double>(cnt);
        }
    }

    ClusterAssignment out;
    out.k = k;
    out.labels.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out.labels.size(); ++i) out.labels[i] = assign[i] + 1;
    out.centroids = centroids;
    out.within_ss = total_wss(coords, assign, centroids);
    out.wss_trace = std::move(trace);
    return out;
}

Dendrogram hclust(const Eigen::MatrixXd& coords, Linkage linkage) {
    const Eigen::Index n = coords.rows();
    if (n < 2) throw DomainError("hclust: need at least 2 observations");

    // Pairwise dissimilarities: squared Euclidean for Ward, Euclidean for complete.
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d2 = (coords.row(i) - coords.row(j)).squaredNorm();
            d(i, j) = d(j, i) = linkage == Linkage::ward ? d2 : std::sqrt(d2);
        }
    }

    std::vector<bool> active(static_cast<std::size_t>(n), true);
    std::vector<int> node(static_cast<std::size_t>(n));     // current node id per slot
    std::vector<int> size(static_cast<std::size_t>(n), 1);  // cluster sizes per slot
    std::iota(node.begin(), node.end(), 0);

    Dendrogram out;
    out.n_leaves = static_cast<std::size_t>(n);
    for (int step = 0; step < n - 1; ++step) {
        Eigen::Index bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        int ni = size[static_cast<std::size_t>(bi)];
        int nj = size[static_cast<std::size_t>(bj)];
        for (Eigen::Index m = 0; m < n; ++m) {
            if (!active[static_cast<std::size_t>(m)] || m == bi || m == bj) continue;
            double dm;
            if (linkage == Linkage::complete) {
                dm = std::max(d(bi, m), d(bj, m));
            } else {
                double nm = size[static_cast<std::size_t>(m)];
                double denom = ni + nj + nm;
                dm = (ni + nm) / denom * d(bi, m) + (nj + nm) / denom * d(bj, m) -
                     nm / denom * d(bi, bj);
            }
            d(bi, m) = d(m, bi) = dm;
        }
        out.merges.push_back({node[static_cast<std::size_t>(bi)], node[static_cast<std::size_t>(bj)],
                              best, ni + nj});
        node[static_cast<std::size_t>(bi)] = static_cast<int>(n) + step;
        size[static_cast<std::size_t>(bi)] = ni + nj;
        active[static_cast<std::size_t>(bj)] = false;
    }
    return out;
}

ClusterAssignment cut_dendrogram(const Dendrogram& dgm, int groups) {
    const int n = static_cast<int>(dgm.n_leaves);
    if (groups < 1 || groups > n)
        throw DomainError("cut_dendrogram: groups must lie in 1.." + std::to_string(n));

    // Union-find over node ids after replaying the first n - groups merges.
    std::vector<int> parent(dgm.merges.size() + static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (int t = 0; t < n - groups; ++t) {
        const Merge& m = dgm.merges[static_cast<std::size_t>(t)];
        int target = n + t;
        parent[static_cast<std::size_t>(find(m.left))] = target;
        parent[static_cast<std::size_t>(find(m.right))] = target;
    }

    ClusterAssignment out;
    out.k = groups;
    out.labels.resize(static_cast<std::size_t>(n));
    std::map<int, int> label_of_root;
    int next = 1;
    for (int i = 0; i < n; ++i) {
        int root = find(i);
        auto it = label_of_root.find(root);
        if (it == label_of_root.end()) it = label_of_root.emplace(root, next++).first;
        out.labels[static_cast<std::size_t>(i)] = it->second;
    }
    return out;
}

SpatialWeightMatrix build_weights(const Eigen::MatrixXd& coords, double cutoff, bool standardize) {
    if (!(cutoff > 0.0)) throw DomainError("build_weights: cutoff must be positive");
    const Eigen::Index n = coords.rows();
    SpatialWeightMatrix out;
    out.w = Eigen::MatrixXd::Zero(n, n);

    std::vector<std::pair<Eigen::Index, Eigen::Index>> coincident;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double dist = (coords.row(i) - coords.row(j)).norm();
            if (dist == 0.0) {
                if (coincident.size() < 10) coincident.emplace_back(i, j);
                continue;
            }
            if (dist <= cutoff) out.w(i, j) = out.w(j, i) = 1.0 / dist;
        }
    if (!coincident.empty()) {
        std::string msg = "build_weights: coincident points:";
        for (auto [i, j] : coincident)
            msg += " (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
        throw DomainError(msg);
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        double s = out.w.row(i).sum();
        if (s == 0.0) out.isolated.push_back(static_cast<int>(i));
        else if (standardize) out.w.row(i) /= s;
    }
    out.row_standardized = standardize;
    out.digest = fnv_digest(out.w);
    return out;
}

double median_pairwise_distance(const Eigen::MatrixXd& coords) {
    const Eigen::Index n = coords.rows();
    if (n < 2) throw DomainError("median_pairwise_distance: need at least 2 points");
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            dists.push_back((coords.row(i) - coords.row(j)).norm());
    std::sort(dists.begin(), dists.end());
    std::size_t m = dists.size();
    if (m % 2 == 1) return dists[m / 2];
    return 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

AnovaResult anova_f_from_sums(double ss_between, long df_between, double ss_within,
                              long df_within) {
    if (df_between < 1 || df_within < 1) throw DomainError("anova: degrees of freedom must be positive");
    AnovaResult r;
    r.ss_between = ss_between;
    r.ss_within = ss_within;
    r.df_between = df_between;
    r.df_within = df_within;
    double msb = ss_between / static_cast<double>(df_between);
    double msw = ss_within / static_cast<double>(df_within);
    r.f = msw > 0.0 ? msb / msw : (msb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.p_f = std::isinf(r.f) ? 0.0 : f_sf(r.f, static_cast<double>(df_between),
                                         static_cast<double>(df_within));
    return r;
}

AnovaResult oneway_anova_bartlett(const std::vector<double>& values,
                                  const std::vector<int>& labels) {
    if (values.size() != labels.size()) throw DomainError("anova: values and labels lengths differ");
    std::map<int, std::vector<double>> groups;
    for (std::size_t i = 0; i < values.size(); ++i) groups[labels[i]].push_back(values[i]);
    const long k = static_cast<long>(groups.size());
    const long N = static_cast<long>(values.size());
    if (k < 2) throw DomainError("anova: need at least 2 groups");
    if (N - k < 1) throw DomainError("anova: no within-group degrees of freedom");

    double grand = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(N);
    double ssb = 0.0, ssw = 0.0;
    std::vector<long> sizes;
    std::vector<double> variances;
    for (const auto& [label, g] : groups) {
        double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * sq(mean - grand);
        double ss = 0.0;
        for (double v : g) ss += sq(v - mean);
        ssw += ss;
        sizes.push_back(static_cast<long>(g.size()));
        variances.push_back(g.size() > 1 ? ss / static_cast<double>(g.size() - 1)
                                         : std::numeric_limits<double>::quiet_NaN());
    }

    AnovaResult r = anova_f_from_sums(ssb, k - 1, ssw, N - k);

    bool bartlett_ok = true;
    for (long s : sizes)
        if (s < 2) bartlett_ok = false;
    if (!bartlett_ok) {
        r.bartlett_note = "Bartlett test undefined: a group has fewer than 2 observations";
        return r;
    }
    double sp2 = ssw / static_cast<double>(N - k);
    bool all_equal = true;
    for (double v : variances)
        if (v != variances.front()) all_equal = false;
    double chi2;
    if (all_equal || sp2 == 0.0) {
        chi2 = 0.0;
    } else {
        double num = static_cast<double>(N - k) * std::log(sp2);
        double inv_sum = 0.0;
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            num -= static_cast<double>(sizes[g] - 1) * std::log(variances[g]);
            inv_sum += 1.0 / static_cast<double>(sizes[g] - 1);
        }
        double c = 1.0 + (inv_sum - 1.0 / static_cast<double>(N - k)) /
                             (3.0 * static_cast<double>(k - 1));
        chi2 = std::max(0.0, num / c);
    }
    r.bartlett_chi2 = chi2;
    r.bartlett_df = k - 1;
    r.p_bartlett = chi2_sf(chi2, static_cast<double>(k - 1));
    return r;
}

}  // namespace spatec
