#pragma once

// Principal-subspace anomaly detection. Fit the top-k eigenvectors of the
// training covariance, project incoming vectors onto the residual
// (abnormal) space, and flag sequences whose squared prediction error
// exceeds the threshold.

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "sempca/common.hpp"

namespace sempca {

enum class VectorMode { Semantic, Count, WeightedCount };

inline const char* to_string(VectorMode m) {
    switch (m) {
        case VectorMode::Semantic: return "semantic";
        case VectorMode::Count: return "count";
        default: return "weighted_count";
    }
}

inline VectorMode vector_mode_from_string(const std::string& s) {
    if (s == "semantic") return VectorMode::Semantic;
    if (s == "count") return VectorMode::Count;
    if (s == "weighted_count") return VectorMode::WeightedCount;
    throw UsageError("unknown vector mode: " + s);
}

struct KPolicy {
    std::optional<int> explicit_k;
    double variance_fraction = 0.95;

    static KPolicy fixed(int k) { return KPolicy{k, 0.0}; }
    static KPolicy by_variance(double fraction) { return KPolicy{std::nullopt, fraction}; }
};

struct PcaModel {
    VectorMode mode = VectorMode::Semantic;
    Vec mean;         // length d
    Mat components;   // d x k, column-orthonormal
    Vec eigenvalues;  // full spectrum, length d, non-increasing
    int k = 0;
    std::optional<double> theta;

    int dim() const { return static_cast<int>(mean.size()); }
};

struct Prediction {
    Label label;
    double score;
};

// Inverse standard-normal CDF: Acklam's rational approximation refined by
// one Halley step against erfc, accurate to near machine precision.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("normal quantile requires p in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

// Eigen-decomposition of the covariance; for d > n the n x n Gram matrix
// is decomposed instead and eigenvectors mapped back.
inline PcaModel fit_pca(const Mat& train_vectors, const KPolicy& policy,
                        VectorMode mode = VectorMode::Semantic) {
    const Eigen::Index n = train_vectors.rows();
    const Eigen::Index d = train_vectors.cols();
    if (n < 2) throw DataError("PCA fit requires at least 2 training vectors");
    if (d < 1) throw DataError("PCA fit requires dimension >= 1");
    if (!train_vectors.allFinite()) throw DataError("PCA fit: non-finite training input");

    PcaModel model;
    model.mode = mode;
    model.mean = train_vectors.colwise().mean();
    Mat centered = train_vectors.rowwise() - model.mean.transpose();

    Vec lambda = Vec::Zero(d);
    Mat vectors;
    if (d <= n) {
        Mat cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
        if (solver.info() != Eigen::Success) throw DataError("eigendecomposition failed");
        // ascending -> descending
        lambda = solver.eigenvalues().reverse();
        vectors = solver.eigenvectors().rowwise().reverse();
    } else {
        Mat gram = (centered * centered.transpose()) / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Mat> solver(gram);
        if (solver.info() != Eigen::Success) throw DataError("eigendecomposition failed");
        Vec gl = solver.eigenvalues().reverse();
        Mat gv = solver.eigenvectors().rowwise().reverse();
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (gl[i] > 1e-12) ++rank;
        vectors = Mat::Zero(d, std::max<Eigen::Index>(rank, 1));
        vectors(0, 0) = 1.0;  // placeholder when rank is 0
        for (Eigen::Index i = 0; i < rank; ++i) {
            lambda[i] = gl[i];
            Vec u = centered.transpose() * gv.col(i);
            vectors.col(i) = u / u.norm();
        }
    }
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        if (lambda[i] < 0 && lambda[i] > -1e-12) lambda[i] = 0.0;
    model.eigenvalues = lambda;

    double total = lambda.sum();
    int k;
    if (policy.explicit_k) {
        k = *policy.explicit_k;
        if (k < 1 || k > static_cast<int>(d)) throw UsageError("explicit k out of range");
    } else if (total <= 0.0) {
        k = 1;  // degenerate: identical training vectors, every SPE is 0
    } else {
        k = 0;
        double acc = 0.0;
        while (k < static_cast<int>(d)) {
            acc += lambda[k];
            ++k;
            if (acc / total >= policy.variance_fraction) break;
        }
    }
    if (total <= 0.0 && !policy.explicit_k) {
        // orthonormal basis vector for the degenerate model
        model.components = Mat::Zero(d, 1);
        model.components(0, 0) = 1.0;
    } else {
        int avail = static_cast<int>(std::min<Eigen::Index>(vectors.cols(), k));
        model.components = vectors.leftCols(avail);
        k = avail;
    }
    model.k = std::max(k, 1);
    return model;
}

inline double spe(const PcaModel& model, const Vec& v) {
    if (v.size() != model.mean.size())
        throw DataError("SPE: dimension mismatch: got " + std::to_string(v.size()) +
                        ", expected " + std::to_string(model.mean.size()));
    Vec vc = v - model.mean;
    Vec residual = vc - model.components * (model.components.transpose() * vc);
    return residual.squaredNorm();
}

// Anomalous iff SPE strictly exceeds theta.
inline Prediction predict(const PcaModel& model, const Vec& v) {
    if (!model.theta) throw UsageError("prediction requires a fitted threshold");
    double s = spe(model, v);
    return Prediction{s > *model.theta ? Label::Anomalous : Label::Normal, s};
}

// SPE control limit from the residual spectrum at confidence 1-alpha.
inline double q_statistic_threshold(const PcaModel& model, double alpha = 0.001) {
    double phi1 = 0, phi2 = 0, phi3 = 0;
    for (Eigen::Index j = model.k; j < model.eigenvalues.size(); ++j) {
        double l = model.eigenvalues[j];
        phi1 += l;
        phi2 += l * l;
        phi3 += l * l * l;
    }
    if (phi2 == 0.0)
        throw DataError(
            "Q-statistic undefined: residual eigenvalues all zero; use percentile thresholds");
    double h0 = 1.0 - 2.0 * phi1 * phi3 / (3.0 * phi2 * phi2);
    double ca = normal_quantile(1.0 - alpha);
    double inner = ca * std::sqrt(2.0 * phi2 * h0 * h0) / phi1 + 1.0 +
                   phi2 * h0 * (h0 - 1.0) / (phi1 * phi1);
    return phi1 * std::pow(inner, 1.0 / h0);
}

// Linear-interpolation percentile over a copy of the values.
inline double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw DataError("percentile of empty set");
    std::sort(values.begin(), values.end());
    double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(rank);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// Training-SPE percentiles plus the Q-statistic limit when defined,
// deduplicated ascending.
inline std::vector<double> threshold_candidates(const PcaModel& model, const Mat& train_vectors) {
    std::vector<double> spes;
    spes.reserve(train_vectors.rows());
    for (Eigen::Index i = 0; i < train_vectors.rows(); ++i)
        spes.push_back(spe(model, train_vectors.row(i).transpose()));
    std::vector<double> out;
    for (double p : {90.0, 95.0, 97.5, 99.0, 99.5, 99.9}) out.push_back(percentile(spes, p));
    try {
        out.push_back(q_statistic_threshold(model));
    } catch (const DataError&) {
        // degenerate residual: percentiles only
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Model file: versioned JSON; P stored column-major as doubles. nlohmann
// prints shortest round-tripping decimals, so reload reproduces SPE values
// bit-for-bit on one platform.
inline nlohmann::json pca_model_to_json(const PcaModel& model) {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "pca";
    j["mode"] = to_string(model.mode);
    j["d"] = model.dim();
    j["k"] = model.k;
    if (model.theta) j["theta"] = *model.theta;
    j["mean"] = std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size());
    j["eigenvalues"] = std::vector<double>(model.eigenvalues.data(),
                                           model.eigenvalues.data() + model.eigenvalues.size());
    j["components"] = std::vector<double>(model.components.data(),
                                          model.components.data() + model.components.size());
    return j;
}

inline PcaModel pca_model_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "pca") throw DataError("not a PCA model file");
    if (j.value("version", 0) != 1) throw DataError("unsupported PCA model version");
    PcaModel model;
    model.mode = vector_mode_from_string(j.at("mode").get<std::string>());
    int d = j.at("d").get<int>();
    model.k = j.at("k").get<int>();
    if (j.contains("theta")) model.theta = j.at("theta").get<double>();
    auto mean = j.at("mean").get<std::vector<double>>();
    auto lambda = j.at("eigenvalues").get<std::vector<double>>();
    auto comps = j.at("components").get<std::vector<double>>();
    if (static_cast<int>(mean.size()) != d || static_cast<int>(lambda.size()) != d ||
        comps.size() != static_cast<size_t>(d) * model.k)
        throw DataError("PCA model file has inconsistent dimensions");
    model.mean = Eigen::Map<const Vec>(mean.data(), d);
    model.eigenvalues = Eigen::Map<const Vec>(lambda.data(), d);
    model.components = Eigen::Map<const Mat>(comps.data(), d, model.k);
    return model;
}

inline void save_pca_model(const PcaModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << pca_model_to_json(model).dump(2) << '\n';
}

inline PcaModel load_pca_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    return pca_model_from_json(nlohmann::json::parse(in));
}

}  // namespace sempca
