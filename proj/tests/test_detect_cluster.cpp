#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "sempca/detect_cluster.hpp"

using namespace sempca;

namespace {

Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }

std::vector<Vec> two_directions() {
    // tight bundle around e1 and another around e2
    return {v2(1.0, 0.0), v2(1.0, 0.05), v2(0.95, 0.02),
            v2(0.0, 1.0), v2(0.05, 1.0), v2(0.02, 0.9)};
}

// reference: average pairwise cosine distance between two member sets,
// computed directly from the original points
double avg_linkage(const std::vector<Vec>& pts, const std::vector<size_t>& a,
                   const std::vector<size_t>& b) {
    double s = 0.0;
    for (size_t i : a)
        for (size_t j : b) s += cosine_distance(pts[i], pts[j]);
    return s / static_cast<double>(a.size() * b.size());
}

}  // namespace

TEST_CASE("cosine distance basics") {
    CHECK(cosine_distance(v2(1, 0), v2(2, 0)) == Catch::Approx(0.0).margin(1e-15));
    CHECK(cosine_distance(v2(1, 0), v2(0, 3)) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_distance(v2(1, 0), v2(-5, 0)) == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(cosine_distance(v2(0, 0), v2(1, 1)) == 2.0);
    CHECK(cosine_distance(v2(1, 1), v2(0, 0)) == 2.0);
}

TEST_CASE("clustering separates direction bundles") {
    auto model = fit_clusters(two_directions(), 0.5);
    CHECK(model.centroids.size() == 2);
    CHECK(model.delta == 0.5);
    REQUIRE(model.radii.size() == 2);
    for (double r : model.radii) CHECK(r < 0.1);

    auto near = predict_cluster(model, v2(0.9, 0.03));
    CHECK(near.label == Label::Normal);
    CHECK(near.score < 0.01);
    auto far = predict_cluster(model, v2(-1.0, -1.0));
    CHECK(far.label == Label::Anomalous);
}

TEST_CASE("zero delta keeps every distinct direction separate") {
    auto pts = two_directions();
    auto model = fit_clusters(pts, 0.0);
    // only exactly-aligned points may merge; nothing here is colinear
    CHECK(model.centroids.size() == pts.size());
}

TEST_CASE("cluster count is non-increasing in delta") {
    auto pts = two_directions();
    size_t prev = pts.size() + 1;
    for (double delta : {0.0, 0.1, 0.3, 0.7, 1.0, 2.0}) {
        auto model = fit_clusters(pts, delta);
        CHECK(model.centroids.size() <= prev);
        prev = model.centroids.size();
    }
    CHECK(fit_clusters(pts, 2.0).centroids.size() == 1);
}

TEST_CASE("merge order follows smallest average-linkage distance") {
    // three points on a line of directions: a and b nearly parallel, c farther
    std::vector<Vec> pts = {v2(1.0, 0.0), v2(1.0, 0.1), v2(1.0, 0.8)};
    double d_ab = cosine_distance(pts[0], pts[1]);
    double d_to_c = avg_linkage(pts, {0, 1}, {2});
    // delta between the first merge and the second keeps exactly two clusters
    double delta = (d_ab + d_to_c) / 2.0;
    auto model = fit_clusters(pts, delta);
    CHECK(model.centroids.size() == 2);
    // the pair cluster averages the two parallel points
    bool found_pair = false;
    for (const auto& c : model.centroids)
        if ((c - (pts[0] + pts[1]) / 2.0).norm() < 1e-12) found_pair = true;
    CHECK(found_pair);
}

TEST_CASE("fitting is deterministic") {
    std::mt19937 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(v2(gauss(rng), gauss(rng)));
    auto a = fit_clusters(pts, 0.3);
    auto b = fit_clusters(pts, 0.3);
    REQUIRE(a.centroids.size() == b.centroids.size());
    for (size_t i = 0; i < a.centroids.size(); ++i)
        CHECK((a.centroids[i] - b.centroids[i]).norm() == 0.0);
}

TEST_CASE("training sets above the cap are subsampled deterministically") {
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(v2(1.0 + i * 0.001, 0.0));
    ClusterFitOptions options;
    options.max_train = 10;
    auto a = fit_clusters(pts, 0.0, VectorMode::WeightedCount, options);
    auto b = fit_clusters(pts, 0.0, VectorMode::WeightedCount, options);
    CHECK(a.centroids.size() <= 10);
    REQUIRE(a.centroids.size() == b.centroids.size());
    for (size_t i = 0; i < a.centroids.size(); ++i)
        CHECK((a.centroids[i] - b.centroids[i]).norm() == 0.0);
}

TEST_CASE("prediction on a zero vector pins distance at the maximum") {
    auto model = fit_clusters({v2(1, 0)}, 0.5);
    auto p = predict_cluster(model, v2(0, 0));
    CHECK(p.score == 2.0);
    CHECK(p.label == Label::Anomalous);
    CHECK(model.saw_zero_vector);
}

TEST_CASE("cluster fit input validation") {
    CHECK_THROWS_AS(fit_clusters({}, 0.5), DataError);
    CHECK_THROWS_AS(fit_clusters({v2(1, 0)}, -0.1), UsageError);
    CHECK_THROWS_AS(fit_clusters({v2(1, 0)}, 2.1), UsageError);
    ClusterModel empty;
    CHECK_THROWS_AS(predict_cluster(empty, v2(1, 0)), DataError);
}

TEST_CASE("cluster model files round-trip exactly") {
    auto model = fit_clusters(two_directions(), 0.5);
    model.weights = {0.25, 0.75};
    std::string path = std::string(std::tmpnam(nullptr)) + ".json";
    save_cluster_model(model, path);
    auto back = load_cluster_model(path);
    std::remove(path.c_str());

    CHECK(back.delta == model.delta);
    CHECK(back.weights == model.weights);
    CHECK(back.radii == model.radii);
    REQUIRE(back.centroids.size() == model.centroids.size());
    for (size_t i = 0; i < back.centroids.size(); ++i)
        CHECK((back.centroids[i] - model.centroids[i]).norm() == 0.0);
}
