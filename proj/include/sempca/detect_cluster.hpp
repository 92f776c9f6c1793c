#pragma once

// Semi-supervised clustering baseline: average-linkage agglomerative
// clustering of normal-only training vectors under cosine distance; a
// vector farther than delta from every centroid is anomalous.

#include <nlohmann/json.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "sempca/common.hpp"
#include "sempca/detect_pca.hpp"  // VectorMode, Prediction

namespace sempca {

// in [0,2]; distance to a zero vector is defined as the maximum (2.0)
inline double cosine_distance(const Vec& a, const Vec& b) {
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 2.0;
    double c = a.dot(b) / (na * nb);
    c = std::clamp(c, -1.0, 1.0);
    return 1.0 - c;
}

struct ClusterModel {
    VectorMode mode = VectorMode::WeightedCount;
    double delta = 0.5;
    std::vector<Vec> centroids;
    std::vector<double> radii;  // max member->centroid cosine distance per cluster
    std::vector<double> weights;  // per-event weights, weighted_count mode only
    bool saw_zero_vector = false;  // prediction met a zero vector (distance pinned at 2)
};

struct ClusterFitOptions {
    size_t max_train = 10'000;  // uniform subsample cap for the O(n^2) matrix
    uint64_t subsample_seed = 17;
};

// Average-linkage merge loop with Lance-Williams updates; ties broken by
// the lowest index pair. Stops when the closest pair exceeds delta.
inline ClusterModel fit_clusters(const std::vector<Vec>& normal_vectors, double delta,
                                 VectorMode mode = VectorMode::WeightedCount,
                                 const ClusterFitOptions& options = {}) {
    if (normal_vectors.empty()) throw DataError("cluster fit requires at least one normal vector");
    if (!(delta >= 0.0 && delta <= 2.0)) throw UsageError("delta must be in [0,2]");

    std::vector<const Vec*> points;
    if (normal_vectors.size() > options.max_train) {
        std::mt19937 rng(static_cast<uint32_t>(options.subsample_seed));
        auto idx = sample_without_replacement(rng, normal_vectors.size(), options.max_train);
        std::sort(idx.begin(), idx.end());
        for (size_t i : idx) points.push_back(&normal_vectors[i]);
    } else {
        for (const auto& v : normal_vectors) points.push_back(&v);
    }
    const size_t n = points.size();

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = cosine_distance(*points[i], *points[j]);

    std::vector<bool> alive(n, true);
    std::vector<size_t> sizes(n, 1);
    std::vector<std::vector<size_t>> members(n);
    for (size_t i = 0; i < n; ++i) members[i] = {i};

    while (true) {
        double best = std::numeric_limits<double>::infinity();
        size_t bi = n, bj = n;
        for (size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                if (dist[i][j] < best) {
                    best = dist[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi == n || best > delta) break;
        // merge bj into bi; average linkage update
        for (size_t m = 0; m < n; ++m) {
            if (!alive[m] || m == bi || m == bj) continue;
            double di = dist[bi][m] * static_cast<double>(sizes[bi]);
            double dj = dist[bj][m] * static_cast<double>(sizes[bj]);
            dist[bi][m] = dist[m][bi] = (di + dj) / static_cast<double>(sizes[bi] + sizes[bj]);
        }
        sizes[bi] += sizes[bj];
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        alive[bj] = false;
    }

    ClusterModel model;
    model.mode = mode;
    model.delta = delta;
    for (size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        Vec centroid = Vec::Zero(points[0]->size());
        for (size_t m : members[i]) centroid += *points[m];
        centroid /= static_cast<double>(members[i].size());
        double radius = 0.0;
        for (size_t m : members[i])
            radius = std::max(radius, cosine_distance(*points[m], centroid));
        model.centroids.push_back(std::move(centroid));
        model.radii.push_back(radius);
    }
    return model;
}

// Score = min cosine distance over centroids; anomalous iff score > delta.
inline Prediction predict_cluster(ClusterModel& model, const Vec& v) {
    if (model.centroids.empty()) throw DataError("cluster model has no centroids");
    if (v.norm() == 0.0) model.saw_zero_vector = true;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : model.centroids) best = std::min(best, cosine_distance(c, v));
    return Prediction{best > model.delta ? Label::Anomalous : Label::Normal, best};
}

inline nlohmann::json cluster_model_to_json(const ClusterModel& model) {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "cluster";
    j["mode"] = to_string(model.mode);
    j["delta"] = model.delta;
    j["weights"] = model.weights;
    j["radii"] = model.radii;
    auto& cs = j["centroids"] = nlohmann::json::array();
    for (const auto& c : model.centroids)
        cs.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    return j;
}

inline ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "cluster") throw DataError("not a cluster model file");
    if (j.value("version", 0) != 1) throw DataError("unsupported cluster model version");
    ClusterModel model;
    model.mode = vector_mode_from_string(j.at("mode").get<std::string>());
    model.delta = j.at("delta").get<double>();
    model.weights = j.at("weights").get<std::vector<double>>();
    model.radii = j.at("radii").get<std::vector<double>>();
    for (const auto& row : j.at("centroids")) {
        auto v = row.get<std::vector<double>>();
        model.centroids.push_back(Eigen::Map<const Vec>(v.data(), v.size()));
    }
    return model;
}

inline void save_cluster_model(const ClusterModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << cluster_model_to_json(model).dump(2) << '\n';
}

inline ClusterModel load_cluster_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    return cluster_model_from_json(nlohmann::json::parse(in));
}

}  // namespace sempca
