#pragma once

// Experimental protocol: chronological splits, precision/recall/F1,
// validation-set grid search, stability sampling, unseen-event subsets
// and wall-clock benchmarks.

#include <nlohmann/json.hpp>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sempca/common.hpp"
#include "sempca/detect_cluster.hpp"
#include "sempca/detect_pca.hpp"

namespace sempca {

struct SplitSpec {
    std::array<int, 3> ratios = {6, 1, 3};
    size_t min_sequences = 10;
};

struct SplitBounds {
    size_t train_end;  // [0, train_end)
    size_t val_end;    // [train_end, val_end); test = [val_end, n)
};

inline SplitBounds split_chronological(size_t n, const SplitSpec& spec = {}) {
    if (n < spec.min_sequences)
        throw DataError("too few sequences to split: " + std::to_string(n));
    for (int r : spec.ratios)
        if (r <= 0) throw UsageError("split ratios must be positive");
    const size_t total = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
    SplitBounds b;
    b.train_end = n * spec.ratios[0] / total;
    b.val_end = b.train_end + n * spec.ratios[1] / total;
    return b;
}

inline double f1_from_pr(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

struct EvaluationReport {
    size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0, recall = 0, f1 = 0;
    bool zero_denominator = false;
    std::optional<double> train_time_s;
    std::optional<double> predict_time_ms_per_seq;
    std::map<std::string, double> hyper_params;
    std::string dataset, detector;
    uint64_t seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["tp"] = tp;
        j["fp"] = fp;
        j["fn"] = fn;
        j["tn"] = tn;
        j["precision"] = precision;
        j["recall"] = recall;
        j["f1"] = f1;
        j["zero_denominator"] = zero_denominator;
        if (train_time_s) j["train_time_s"] = *train_time_s;
        if (predict_time_ms_per_seq) j["predict_time_ms_per_seq"] = *predict_time_ms_per_seq;
        j["hyper_params"] = hyper_params;
        j["dataset"] = dataset;
        j["detector"] = detector;
        j["seed"] = seed;
        return j;
    }
};

inline EvaluationReport metrics(const std::vector<Label>& predictions,
                                const std::vector<Label>& labels) {
    if (predictions.size() != labels.size())
        throw DataError("metrics: predictions and labels differ in length");
    EvaluationReport r;
    for (size_t i = 0; i < labels.size(); ++i) {
        bool truth = labels[i] == Label::Anomalous;
        bool pred = predictions[i] == Label::Anomalous;
        if (truth && pred) ++r.tp;
        else if (!truth && pred) ++r.fp;
        else if (truth && !pred) ++r.fn;
        else ++r.tn;
    }
    if (r.tp + r.fp == 0 || r.tp + r.fn == 0) r.zero_denominator = true;
    r.precision = r.tp + r.fp ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = r.tp + r.fn ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1 = f1_from_pr(r.precision, r.recall);
    return r;
}

// Grid search scaffolding. Each candidate fits lazily and scores on the
// validation set; failing candidates score -infinity. Ties break by
// smaller k, then larger theta, then smaller delta.
struct GridPoint {
    std::map<std::string, double> params;
    double f1 = -std::numeric_limits<double>::infinity();
    std::string error;
};

inline bool grid_point_better(const GridPoint& a, const GridPoint& b) {
    if (a.f1 != b.f1) return a.f1 > b.f1;
    auto get = [](const GridPoint& p, const char* key, double dflt) {
        auto it = p.params.find(key);
        return it == p.params.end() ? dflt : it->second;
    };
    double ak = get(a, "k", 0), bk = get(b, "k", 0);
    if (ak != bk) return ak < bk;
    double at = get(a, "theta", 0), bt = get(b, "theta", 0);
    if (at != bt) return at > bt;
    return get(a, "delta", 0) < get(b, "delta", 0);
}

struct PcaGridResult {
    PcaModel model;  // theta set
    GridPoint best;
    std::vector<GridPoint> log;
};

inline const std::vector<double>& default_variance_fractions() {
    static const std::vector<double> fractions = {0.80, 0.90, 0.95, 0.98, 0.99};
    return fractions;
}

inline PcaGridResult grid_search_pca(const Mat& train, const Mat& val,
                                     const std::vector<Label>& val_labels, VectorMode mode,
                                     const std::vector<double>& fractions =
                                         default_variance_fractions()) {
    if (fractions.empty()) throw UsageError("empty grid");
    PcaGridResult result;
    bool have_best = false;
    PcaModel best_model;
    for (double frac : fractions) {
        PcaModel model;
        std::vector<double> candidates;
        try {
            model = fit_pca(train, KPolicy::by_variance(frac), mode);
            candidates = threshold_candidates(model, train);
        } catch (const std::exception& e) {
            GridPoint p;
            p.params = {{"variance_fraction", frac}};
            p.error = e.what();
            result.log.push_back(std::move(p));
            continue;
        }
        std::vector<double> val_spe(val.rows());
        for (Eigen::Index i = 0; i < val.rows(); ++i)
            val_spe[i] = spe(model, val.row(i).transpose());
        for (double theta : candidates) {
            GridPoint p;
            p.params = {{"variance_fraction", frac},
                        {"k", static_cast<double>(model.k)},
                        {"theta", theta}};
            std::vector<Label> preds(val.rows());
            for (Eigen::Index i = 0; i < val.rows(); ++i)
                preds[i] = val_spe[i] > theta ? Label::Anomalous : Label::Normal;
            p.f1 = metrics(preds, val_labels).f1;
            if (!have_best || grid_point_better(p, result.best)) {
                have_best = true;
                result.best = p;
                best_model = model;
                best_model.theta = theta;
            }
            result.log.push_back(std::move(p));
        }
    }
    if (!have_best) throw DataError("grid search: every point failed");
    result.model = std::move(best_model);
    return result;
}

struct ClusterGridResult {
    ClusterModel model;
    GridPoint best;
    std::vector<GridPoint> log;
};

inline std::vector<double> default_delta_grid() {
    std::vector<double> d;
    for (int i = 1; i <= 9; ++i) d.push_back(i / 10.0);
    return d;
}

inline ClusterGridResult grid_search_cluster(const std::vector<Vec>& normal_train,
                                             const std::vector<Vec>& val,
                                             const std::vector<Label>& val_labels,
                                             VectorMode mode,
                                             const std::vector<double>& deltas =
                                                 default_delta_grid(),
                                             const ClusterFitOptions& options = {}) {
    if (deltas.empty()) throw UsageError("empty grid");
    ClusterGridResult result;
    bool have_best = false;
    for (double delta : deltas) {
        GridPoint p;
        p.params = {{"delta", delta}};
        try {
            ClusterModel model = fit_clusters(normal_train, delta, mode, options);
            std::vector<Label> preds(val.size());
            for (size_t i = 0; i < val.size(); ++i)
                preds[i] = predict_cluster(model, val[i]).label;
            p.f1 = metrics(preds, val_labels).f1;
            if (!have_best || grid_point_better(p, result.best)) {
                have_best = true;
                result.best = p;
                result.model = std::move(model);
            }
        } catch (const std::exception& e) {
            p.error = e.what();
        }
        result.log.push_back(std::move(p));
    }
    if (!have_best) throw DataError("grid search: every point failed");
    return result;
}

// Stability under sampled training sets. The callback receives the sampled
// training indices (into the fixed training set) and returns the test F1
// after fitting and tuning on that sample; validation and test stay fixed.
struct StabilityRow {
    double ratio_pct;
    double mean_f1;
    double stddev_f1;
    std::vector<double> f1_per_repeat;
};

inline std::vector<StabilityRow> stability_experiment(
    size_t n_train, const std::vector<double>& ratios_pct, int repeats, uint64_t base_seed,
    const std::function<double(const std::vector<size_t>&)>& fit_and_score) {
    std::vector<StabilityRow> rows;
    for (double ratio : ratios_pct) {
        size_t k = static_cast<size_t>(std::floor(static_cast<double>(n_train) * ratio / 100.0));
        if (k < 2)
            throw DataError("stability sample too small: " + std::to_string(k) + " sequences at " +
                            std::to_string(ratio) + "%");
        StabilityRow row;
        row.ratio_pct = ratio;
        for (int rep = 0; rep < repeats; ++rep) {
            std::mt19937 rng(static_cast<uint32_t>(base_seed + static_cast<uint64_t>(rep)));
            auto idx = sample_without_replacement(rng, n_train, k);
            std::sort(idx.begin(), idx.end());  // keep chronological order inside the sample
            row.f1_per_repeat.push_back(fit_and_score(idx));
        }
        double mean = 0;
        for (double f : row.f1_per_repeat) mean += f;
        mean /= static_cast<double>(repeats);
        double var = 0;
        for (double f : row.f1_per_repeat) var += (f - mean) * (f - mean);
        var /= static_cast<double>(repeats);
        row.mean_f1 = mean;
        row.stddev_f1 = std::sqrt(var);
        rows.push_back(std::move(row));
    }
    return rows;
}

// Unseen-event subsets: sweep training prefixes, measure how many test
// templates each subset misses, and report F1 for the subset closest to
// each target count. Targets outside the achievable range fail.
struct UnseenRow {
    size_t subset_size;
    size_t unseen_count;
    double f1;
};

inline std::vector<UnseenRow> unseen_event_experiment(
    size_t n_train, const std::vector<size_t>& target_unseen_counts,
    const std::function<size_t(const std::vector<size_t>&)>& unseen_count_of,
    const std::function<double(const std::vector<size_t>&)>& fit_and_score,
    int sweep_steps = 12) {
    if (n_train < 2) throw DataError("training set too small for unseen-event sweep");
    std::vector<std::pair<size_t, size_t>> sweep;  // (size, unseen)
    for (int s = 0; s < sweep_steps; ++s) {
        size_t size = std::max<size_t>(
            2, static_cast<size_t>(std::round(static_cast<double>(n_train) *
                                              static_cast<double>(sweep_steps - s) /
                                              static_cast<double>(sweep_steps))));
        std::vector<size_t> idx(size);
        for (size_t i = 0; i < size; ++i) idx[i] = i;
        sweep.emplace_back(size, unseen_count_of(idx));
    }
    std::vector<UnseenRow> rows;
    for (size_t target : target_unseen_counts) {
        size_t best_size = 0;
        size_t best_unseen = 0;
        long best_gap = std::numeric_limits<long>::max();
        for (auto [size, unseen] : sweep) {
            long gap = std::labs(static_cast<long>(unseen) - static_cast<long>(target));
            if (gap < best_gap) {
                best_gap = gap;
                best_size = size;
                best_unseen = unseen;
            }
        }
        size_t lo = sweep.back().second, hi = sweep.front().second;
        if (lo > hi) std::swap(lo, hi);
        if (target < lo || target > hi)
            throw DataError("unseen-event target unreachable: " + std::to_string(target));
        std::vector<size_t> idx(best_size);
        for (size_t i = 0; i < best_size; ++i) idx[i] = i;
        rows.push_back(UnseenRow{best_size, best_unseen, fit_and_score(idx)});
    }
    return rows;
}

// Wall-clock of a tuned fit and of batch prediction; grid search excluded.
struct BenchResult {
    double train_time_s = 0;
    std::optional<double> predict_time_ms_per_seq;
};

inline BenchResult bench(const std::function<void()>& fit, const std::function<void()>& predict_all,
                         size_t n_test) {
    using clock = std::chrono::steady_clock;
    BenchResult r;
    auto t0 = clock::now();
    fit();
    auto t1 = clock::now();
    r.train_time_s = std::chrono::duration<double>(t1 - t0).count();
    if (n_test > 0) {
        auto t2 = clock::now();
        predict_all();
        auto t3 = clock::now();
        r.predict_time_ms_per_seq =
            std::chrono::duration<double, std::milli>(t3 - t2).count() / static_cast<double>(n_test);
    }
    return r;
}

}  // namespace sempca
