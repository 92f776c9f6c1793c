#pragma once

// End-to-end wiring: configuration, dataset assembly (parse -> label ->
// group -> split), vectorization in the three modes, and the experiment
// drivers the CLI exposes.

#include <nlohmann/json.hpp>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sempca/common.hpp"
#include "sempca/detect_cluster.hpp"
#include "sempca/detect_pca.hpp"
#include "sempca/eval.hpp"
#include "sempca/grouper.hpp"
#include "sempca/parser.hpp"
#include "sempca/representation.hpp"

namespace sempca {

enum class LabelKind { None, KeyCsv, LineRegex };
enum class DetectorKind { Pca, Cluster };
enum class ThetaSource { Value, QStatistic };

struct PipelineConfig {
    std::string log_file;
    std::string word_vectors;
    LabelKind label_kind = LabelKind::None;
    std::string label_file;
    std::string label_regex;  // content matching it is anomalous
    std::string header_regex = R"((?<content>.*))";
    ParserConfig parser;
    GroupingStrategy grouping;
    std::array<int, 3> split = {6, 1, 3};
    DetectorKind detector = DetectorKind::Pca;
    VectorMode mode = VectorMode::Semantic;
    std::optional<int> k;
    double variance_fraction = 0.95;
    std::optional<double> theta;
    ThetaSource theta_source = ThetaSource::QStatistic;
    double alpha = 0.001;
    double delta = 0.5;
    std::vector<double> grid_variance_fractions = default_variance_fractions();
    std::vector<double> grid_deltas = default_delta_grid();
    bool idf_smoothing = true;
    bool oov_row = false;
    size_t max_cluster_train = 10'000;
    uint64_t seed = 42;
    std::vector<double> stability_ratios_pct = {1, 2, 5, 10, 20};
    int stability_repeats = 10;
    std::vector<size_t> unseen_targets;
    std::string output_dir = "out";
    std::string run_id = "default";
    std::string dataset_name = "dataset";

    static PipelineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.log_file = j.value("log_file", c.log_file);
    c.word_vectors = j.value("word_vectors", c.word_vectors);
    std::string lk = j.value("label_kind", "none");
    if (lk == "none") c.label_kind = LabelKind::None;
    else if (lk == "key_csv") c.label_kind = LabelKind::KeyCsv;
    else if (lk == "line_regex") c.label_kind = LabelKind::LineRegex;
    else throw UsageError("unknown label_kind: " + lk);
    c.label_file = j.value("label_file", "");
    c.label_regex = j.value("label_regex", "");
    c.header_regex = j.value("header_regex", c.header_regex);
    if (j.contains("parser")) {
        const auto& p = j["parser"];
        c.parser.tree_depth = p.value("tree_depth", c.parser.tree_depth);
        c.parser.similarity_threshold =
            p.value("similarity_threshold", c.parser.similarity_threshold);
        c.parser.max_children = p.value("max_children", c.parser.max_children);
    }
    if (j.contains("masks"))
        for (const auto& m : j["masks"])
            c.parser.variable_masks.emplace_back(m.at(0).get<std::string>(),
                                                 m.at(1).get<std::string>());
    if (j.contains("grouping")) {
        const auto& g = j["grouping"];
        std::string kind = g.value("kind", "session");
        if (kind == "session") c.grouping.kind = WindowKind::Session;
        else if (kind == "fixed_count") c.grouping.kind = WindowKind::FixedCount;
        else if (kind == "fixed_time") c.grouping.kind = WindowKind::FixedTime;
        else if (kind == "session_fixed_count") c.grouping.kind = WindowKind::SessionFixedCount;
        else throw UsageError("unknown grouping kind: " + kind);
        c.grouping.window = g.value("window", int64_t{0});
    }
    if (j.contains("split")) {
        auto s = j["split"].get<std::vector<int>>();
        if (s.size() != 3) throw UsageError("split must have three ratios");
        c.split = {s[0], s[1], s[2]};
    }
    std::string det = j.value("detector", "pca");
    if (det == "pca") c.detector = DetectorKind::Pca;
    else if (det == "cluster") c.detector = DetectorKind::Cluster;
    else throw UsageError("unknown detector: " + det);
    c.mode = vector_mode_from_string(j.value("mode", "semantic"));
    if (j.contains("k") && !j["k"].is_null()) c.k = j["k"].get<int>();
    c.variance_fraction = j.value("variance_fraction", c.variance_fraction);
    if (j.contains("theta") && !j["theta"].is_null()) {
        c.theta = j["theta"].get<double>();
        c.theta_source = ThetaSource::Value;
    }
    c.alpha = j.value("alpha", c.alpha);
    c.delta = j.value("delta", c.delta);
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("variance_fractions"))
            c.grid_variance_fractions = g["variance_fractions"].get<std::vector<double>>();
        if (g.contains("deltas")) c.grid_deltas = g["deltas"].get<std::vector<double>>();
    }
    c.idf_smoothing = j.value("idf_smoothing", c.idf_smoothing);
    c.oov_row = j.value("oov_row", c.oov_row);
    c.max_cluster_train = j.value("max_cluster_train", c.max_cluster_train);
    c.seed = j.value("seed", c.seed);
    if (j.contains("stability")) {
        const auto& s = j["stability"];
        if (s.contains("ratios_pct"))
            c.stability_ratios_pct = s["ratios_pct"].get<std::vector<double>>();
        c.stability_repeats = s.value("repeats", c.stability_repeats);
    }
    if (j.contains("unseen_targets"))
        c.unseen_targets = j["unseen_targets"].get<std::vector<size_t>>();
    c.output_dir = j.value("output_dir", c.output_dir);
    c.run_id = j.value("run_id", c.run_id);
    c.dataset_name = j.value("dataset_name", c.dataset_name);
    return c;
}

inline nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j;
    j["log_file"] = log_file;
    j["word_vectors"] = word_vectors;
    j["label_kind"] = label_kind == LabelKind::None ? "none"
                      : label_kind == LabelKind::KeyCsv ? "key_csv" : "line_regex";
    j["label_file"] = label_file;
    j["label_regex"] = label_regex;
    j["header_regex"] = header_regex;
    j["parser"] = {{"tree_depth", parser.tree_depth},
                   {"similarity_threshold", parser.similarity_threshold},
                   {"max_children", parser.max_children}};
    auto& masks = j["masks"] = nlohmann::json::array();
    for (const auto& [re, repl] : parser.variable_masks) masks.push_back({re, repl});
    const char* gk = grouping.kind == WindowKind::Session ? "session"
                     : grouping.kind == WindowKind::FixedCount ? "fixed_count"
                     : grouping.kind == WindowKind::FixedTime ? "fixed_time"
                                                              : "session_fixed_count";
    j["grouping"] = {{"kind", gk}, {"window", grouping.window}};
    j["split"] = split;
    j["detector"] = detector == DetectorKind::Pca ? "pca" : "cluster";
    j["mode"] = to_string(mode);
    if (k) j["k"] = *k;
    j["variance_fraction"] = variance_fraction;
    if (theta) j["theta"] = *theta;
    j["alpha"] = alpha;
    j["delta"] = delta;
    j["grid"] = {{"variance_fractions", grid_variance_fractions}, {"deltas", grid_deltas}};
    j["idf_smoothing"] = idf_smoothing;
    j["oov_row"] = oov_row;
    j["max_cluster_train"] = max_cluster_train;
    j["seed"] = seed;
    j["stability"] = {{"ratios_pct", stability_ratios_pct}, {"repeats", stability_repeats}};
    j["unseen_targets"] = unseen_targets;
    j["output_dir"] = output_dir;
    j["run_id"] = run_id;
    j["dataset_name"] = dataset_name;
    return j;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    return PipelineConfig::from_json(nlohmann::json::parse(in));
}

// FNV-1a, used to key artifacts by the producing config
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const PipelineConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(config.to_json().dump())));
    return buf;
}

struct Dataset {
    ParseResult parsed;
    std::vector<LogSequence> sequences;
    SplitBounds bounds{};
    size_t train_vocab_size = 0;
};

inline std::vector<Label> assign_record_labels(const PipelineConfig& config,
                                               const std::vector<RawLogRecord>& records) {
    std::vector<Label> labels(records.size(), Label::Unlabeled);
    switch (config.label_kind) {
        case LabelKind::None:
            break;
        case LabelKind::KeyCsv: {
            std::ifstream in(config.label_file);
            if (!in) throw DataError("cannot open label file: " + config.label_file);
            std::map<std::string, Label> by_key;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto comma = line.find(',');
                if (comma == std::string::npos)
                    throw DataError("malformed label line: " + line);
                by_key[line.substr(0, comma)] = label_from_string(line.substr(comma + 1));
            }
            for (size_t i = 0; i < records.size(); ++i) {
                if (!records[i].group_key)
                    throw DataError("key_csv labels need group keys (line " +
                                    std::to_string(records[i].line_no) + ")");
                auto it = by_key.find(*records[i].group_key);
                labels[i] = it == by_key.end() ? Label::Unlabeled : it->second;
            }
            break;
        }
        case LabelKind::LineRegex: {
            boost::regex re(config.label_regex);
            for (size_t i = 0; i < records.size(); ++i)
                labels[i] = boost::regex_search(records[i].content, re) ? Label::Anomalous
                                                                        : Label::Normal;
            break;
        }
    }
    return labels;
}

inline Dataset build_dataset(const PipelineConfig& config) {
    Dataset ds;
    HeaderPattern header(config.header_regex);
    ds.parsed = parse_corpus_file(config.log_file, header, config.parser);
    auto labels = assign_record_labels(config, ds.parsed.records);
    ds.sequences = group(ds.parsed.records, ds.parsed.assignments, labels, config.grouping);
    ds.bounds = split_chronological(ds.sequences.size(), SplitSpec{config.split});
    int max_id = -1;
    for (size_t s = 0; s < ds.bounds.train_end; ++s)
        for (int id : ds.sequences[s].template_ids) max_id = std::max(max_id, id);
    ds.train_vocab_size = static_cast<size_t>(max_id + 1);
    return ds;
}

// Rows of the returned matrix align with ds.sequences. Training-only
// artifacts (IDF table, event weights, count dimensionality) come from
// the training slice.
struct VectorizeResult {
    Mat vectors;
    size_t train_vocab_size = 0;
    VectorMode mode = VectorMode::Semantic;
};

inline VectorizeResult vectorize(const PipelineConfig& config, const Dataset& ds,
                                 const WordVectorStore* store) {
    VectorizeResult out;
    out.mode = config.mode;
    out.train_vocab_size = ds.train_vocab_size;
    const size_t n = ds.sequences.size();
    switch (config.mode) {
        case VectorMode::Semantic: {
            if (!store) throw UsageError("semantic mode requires a word-vector store");
            std::vector<LogTemplate> train_templates(
                ds.parsed.vocabulary.begin(),
                ds.parsed.vocabulary.begin() + ds.train_vocab_size);
            IdfTable table = IdfTable::build(train_templates, config.idf_smoothing);
            EventVectorCache cache(ds.parsed.vocabulary, *store, table);
            out.vectors = Mat(n, store->dimension());
            for (size_t i = 0; i < n; ++i)
                out.vectors.row(i) = embed_sequence(ds.sequences[i], cache).values.transpose();
            break;
        }
        case VectorMode::Count: {
            out.vectors = Mat(n, ds.train_vocab_size);
            for (size_t i = 0; i < n; ++i)
                out.vectors.row(i) =
                    count_vector(ds.sequences[i], ds.train_vocab_size).values.transpose();
            break;
        }
        case VectorMode::WeightedCount: {
            std::vector<LogSequence> train_seqs(ds.sequences.begin(),
                                                ds.sequences.begin() + ds.bounds.train_end);
            auto weights = idf_event_weights(train_seqs, ds.train_vocab_size);
            out.vectors = Mat(n, ds.train_vocab_size);
            for (size_t i = 0; i < n; ++i)
                out.vectors.row(i) =
                    weighted_count_vector(ds.sequences[i], weights).values.transpose();
            break;
        }
    }
    return out;
}

inline std::vector<Label> slice_labels(const Dataset& ds, size_t begin, size_t end) {
    std::vector<Label> out;
    for (size_t i = begin; i < end; ++i) out.push_back(ds.sequences[i].label);
    return out;
}

struct ExperimentResult {
    EvaluationReport report;
    std::vector<GridPoint> grid_log;
    nlohmann::json extra;
};

// Grid search on the validation slice, then score the test slice.
inline ExperimentResult run_grid_evaluate(const PipelineConfig& config, const Dataset& ds,
                                          const Mat& vectors) {
    const auto& b = ds.bounds;
    const size_t n = ds.sequences.size();
    Mat train = vectors.topRows(b.train_end);
    Mat val = vectors.middleRows(b.train_end, b.val_end - b.train_end);
    Mat test = vectors.bottomRows(n - b.val_end);
    auto val_labels = slice_labels(ds, b.train_end, b.val_end);
    auto test_labels = slice_labels(ds, b.val_end, n);

    ExperimentResult result;
    std::vector<Label> preds;
    if (config.detector == DetectorKind::Pca) {
        auto gr = grid_search_pca(train, val, val_labels, config.mode,
                                  config.grid_variance_fractions);
        for (Eigen::Index i = 0; i < test.rows(); ++i)
            preds.push_back(predict(gr.model, test.row(i).transpose()).label);
        result.grid_log = std::move(gr.log);
        result.report = metrics(preds, test_labels);
        result.report.hyper_params = gr.best.params;
    } else {
        std::vector<Vec> normal_train;
        for (size_t i = 0; i < b.train_end; ++i)
            if (ds.sequences[i].label == Label::Normal)
                normal_train.push_back(vectors.row(i).transpose());
        std::vector<Vec> val_vecs;
        for (size_t i = b.train_end; i < b.val_end; ++i)
            val_vecs.push_back(vectors.row(i).transpose());
        ClusterFitOptions options;
        options.max_train = config.max_cluster_train;
        options.subsample_seed = config.seed;
        auto gr = grid_search_cluster(normal_train, val_vecs, val_labels, config.mode,
                                      config.grid_deltas, options);
        for (Eigen::Index i = 0; i < test.rows(); ++i)
            preds.push_back(predict_cluster(gr.model, test.row(i).transpose()).label);
        result.grid_log = std::move(gr.log);
        result.report = metrics(preds, test_labels);
        result.report.hyper_params = gr.best.params;
    }
    result.report.dataset = config.dataset_name;
    result.report.detector = config.detector == DetectorKind::Pca
                                 ? (config.mode == VectorMode::Semantic ? "sempca" : "pca")
                                 : (config.mode == VectorMode::Semantic ? "semlogcluster"
                                                                        : "logcluster");
    result.report.seed = config.seed;
    return result;
}

// Re-vectorizes with representation artifacts rebuilt from a training
// subset (sampled IDF table / count dimensionality), tunes on the fixed
// validation slice, and returns the test F1.
inline double fit_score_on_subset(const PipelineConfig& config, const Dataset& ds,
                                  const WordVectorStore* store,
                                  const std::vector<size_t>& train_subset) {
    if (train_subset.size() < 2) throw DataError("training subset too small");
    const auto& b = ds.bounds;
    const size_t n = ds.sequences.size();

    std::vector<bool> template_in_subset(ds.parsed.vocabulary.size(), false);
    int max_id = -1;
    for (size_t s : train_subset)
        for (int id : ds.sequences[s].template_ids) {
            template_in_subset[id] = true;
            max_id = std::max(max_id, id);
        }
    const size_t subset_vocab = static_cast<size_t>(max_id + 1);

    Mat all;
    if (config.mode == VectorMode::Semantic) {
        if (!store) throw UsageError("semantic mode requires a word-vector store");
        std::vector<LogTemplate> subset_templates;
        for (size_t t = 0; t < ds.parsed.vocabulary.size(); ++t)
            if (template_in_subset[t]) subset_templates.push_back(ds.parsed.vocabulary[t]);
        IdfTable table = IdfTable::build(subset_templates, config.idf_smoothing);
        EventVectorCache cache(ds.parsed.vocabulary, *store, table);
        all = Mat(n, store->dimension());
        for (size_t i = 0; i < n; ++i)
            all.row(i) = embed_sequence(ds.sequences[i], cache).values.transpose();
    } else if (config.mode == VectorMode::Count) {
        all = Mat(n, subset_vocab);
        for (size_t i = 0; i < n; ++i)
            all.row(i) = count_vector(ds.sequences[i], subset_vocab).values.transpose();
    } else {
        std::vector<LogSequence> subset_seqs;
        for (size_t s : train_subset) subset_seqs.push_back(ds.sequences[s]);
        auto weights = idf_event_weights(subset_seqs, subset_vocab);
        all = Mat(n, subset_vocab);
        for (size_t i = 0; i < n; ++i)
            all.row(i) = weighted_count_vector(ds.sequences[i], weights).values.transpose();
    }

    Mat train(train_subset.size(), all.cols());
    for (size_t r = 0; r < train_subset.size(); ++r) train.row(r) = all.row(train_subset[r]);
    Mat val = all.middleRows(b.train_end, b.val_end - b.train_end);
    Mat test = all.bottomRows(n - b.val_end);
    auto val_labels = slice_labels(ds, b.train_end, b.val_end);
    auto test_labels = slice_labels(ds, b.val_end, n);

    std::vector<Label> preds;
    if (config.detector == DetectorKind::Pca) {
        auto gr = grid_search_pca(train, val, val_labels, config.mode,
                                  config.grid_variance_fractions);
        for (Eigen::Index i = 0; i < test.rows(); ++i)
            preds.push_back(predict(gr.model, test.row(i).transpose()).label);
    } else {
        std::vector<Vec> normal_train;
        for (size_t r = 0; r < train_subset.size(); ++r)
            if (ds.sequences[train_subset[r]].label == Label::Normal)
                normal_train.push_back(train.row(r).transpose());
        std::vector<Vec> val_vecs;
        for (Eigen::Index i = 0; i < val.rows(); ++i) val_vecs.push_back(val.row(i).transpose());
        ClusterFitOptions options;
        options.max_train = config.max_cluster_train;
        options.subsample_seed = config.seed;
        auto gr = grid_search_cluster(normal_train, val_vecs, val_labels, config.mode,
                                      config.grid_deltas, options);
        for (Eigen::Index i = 0; i < test.rows(); ++i)
            preds.push_back(predict_cluster(gr.model, test.row(i).transpose()).label);
    }
    return metrics(preds, test_labels).f1;
}

inline std::vector<StabilityRow> run_stability(const PipelineConfig& config, const Dataset& ds,
                                               const WordVectorStore* store) {
    return stability_experiment(
        ds.bounds.train_end, config.stability_ratios_pct, config.stability_repeats, config.seed,
        [&](const std::vector<size_t>& subset) {
            return fit_score_on_subset(config, ds, store, subset);
        });
}

inline std::vector<UnseenRow> run_unseen(const PipelineConfig& config, const Dataset& ds,
                                         const WordVectorStore* store) {
    const auto& b = ds.bounds;
    std::vector<int> test_templates;
    for (size_t i = b.val_end; i < ds.sequences.size(); ++i)
        for (int id : ds.sequences[i].template_ids) test_templates.push_back(id);
    std::sort(test_templates.begin(), test_templates.end());
    test_templates.erase(std::unique(test_templates.begin(), test_templates.end()),
                         test_templates.end());

    auto unseen_count = [&](const std::vector<size_t>& subset) {
        std::vector<bool> seen(ds.parsed.vocabulary.size(), false);
        for (size_t s : subset)
            for (int id : ds.sequences[s].template_ids) seen[id] = true;
        size_t unseen = 0;
        for (int id : test_templates)
            if (!seen[id]) ++unseen;
        return unseen;
    };
    return unseen_event_experiment(
        b.train_end, config.unseen_targets, unseen_count,
        [&](const std::vector<size_t>& subset) {
            return fit_score_on_subset(config, ds, store, subset);
        });
}

// Times the tuned fit and batch prediction; the grid search itself is not
// part of the reported training time.
inline EvaluationReport run_bench(const PipelineConfig& config, const Dataset& ds,
                                  const Mat& vectors) {
    ExperimentResult tuned = run_grid_evaluate(config, ds, vectors);
    const auto& b = ds.bounds;
    const size_t n = ds.sequences.size();
    Mat train = vectors.topRows(b.train_end);
    Mat test = vectors.bottomRows(n - b.val_end);

    EvaluationReport report = tuned.report;
    if (config.detector == DetectorKind::Pca) {
        double frac = tuned.report.hyper_params.at("variance_fraction");
        double theta = tuned.report.hyper_params.at("theta");
        PcaModel model;
        auto b_res = bench(
            [&] {
                model = fit_pca(train, KPolicy::by_variance(frac), config.mode);
                model.theta = theta;
            },
            [&] {
                for (Eigen::Index i = 0; i < test.rows(); ++i)
                    (void)predict(model, test.row(i).transpose());
            },
            static_cast<size_t>(test.rows()));
        report.train_time_s = b_res.train_time_s;
        report.predict_time_ms_per_seq = b_res.predict_time_ms_per_seq;
    } else {
        double delta = tuned.report.hyper_params.at("delta");
        std::vector<Vec> normal_train;
        for (size_t i = 0; i < b.train_end; ++i)
            if (ds.sequences[i].label == Label::Normal)
                normal_train.push_back(vectors.row(i).transpose());
        ClusterFitOptions options;
        options.max_train = config.max_cluster_train;
        options.subsample_seed = config.seed;
        ClusterModel model;
        auto b_res = bench(
            [&] { model = fit_clusters(normal_train, delta, config.mode, options); },
            [&] {
                for (Eigen::Index i = 0; i < test.rows(); ++i)
                    (void)predict_cluster(model, test.row(i).transpose());
            },
            static_cast<size_t>(test.rows()));
        report.train_time_s = b_res.train_time_s;
        report.predict_time_ms_per_seq = b_res.predict_time_ms_per_seq;
    }
    return report;
}

}  // namespace sempca
