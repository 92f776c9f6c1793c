// Command-line front end. Stages communicate through write-once artifacts
// under <output_dir>/<run_id>/; every stage records the config hash that
// produced it. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 internal error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sempca/pipeline.hpp"
#include "sempca/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sempca;

namespace {

int g_verbosity = [] {
    const char* env = std::getenv("SEMPCA_LOG");
    if (!env) return 1;
    std::string v = env;
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}();

void log_info(const std::string& msg) {
    if (g_verbosity >= 1) std::cerr << "[sempca] " << msg << "\n";
}

struct RunPaths {
    fs::path dir;

    fs::path vocab() const { return dir / "vocab.tsv"; }
    fs::path assignments() const { return dir / "assignments.tsv"; }
    fs::path records() const { return dir / "records.tsv"; }
    fs::path parse_report() const { return dir / "parse_report.json"; }
    fs::path sequences() const { return dir / "sequences.tsv"; }
    fs::path vectors() const { return dir / "vectors.bin"; }
    fs::path vectors_meta() const { return dir / "vectors_meta.json"; }
    fs::path model() const { return dir / "model.json"; }
    fs::path predictions() const { return dir / "predictions.tsv"; }
    fs::path report(const std::string& stage) const { return dir / (stage + ".json"); }
    fs::path grid_log() const { return dir / "grid_log.jsonl"; }
};

RunPaths run_paths(const PipelineConfig& config) {
    RunPaths p{fs::path(config.output_dir) / config.run_id};
    fs::create_directories(p.dir);
    return p;
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        throw DataError("missing artifact " + path.string() + "; run `sempca " + producer +
                        "` first");
}

void refuse_overwrite(const fs::path& path, bool force) {
    if (fs::exists(path) && !force)
        throw UsageError("artifact exists: " + path.string() + " (use --force to overwrite)");
}

void write_text(const fs::path& path, const std::string& text, bool force) {
    refuse_overwrite(path, force);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j, bool force) {
    write_text(path, j.dump(2) + "\n", force);
}

// row-major doubles with a small header
void write_matrix(const fs::path& path, const Mat& m, bool force) {
    refuse_overwrite(path, force);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    const char magic[8] = {'S', 'E', 'M', 'P', 'C', 'A', 'V', '1'};
    out.write(magic, 8);
    uint64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
}

Mat read_matrix(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != "SEMPCAV1") throw DataError("bad vectors file: " + path.string());
    uint64_t rows, cols;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    Mat m(rows, cols);
    for (uint64_t i = 0; i < rows; ++i)
        for (uint64_t j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), 8);
            m(i, j) = v;
        }
    if (!in) throw DataError("truncated vectors file: " + path.string());
    return m;
}

// Rebuild the in-memory dataset from staged artifacts.
Dataset dataset_from_artifacts(const PipelineConfig& config, const RunPaths& paths) {
    require_artifact(paths.vocab(), "parse");
    require_artifact(paths.sequences(), "group");
    Dataset ds;
    {
        std::ifstream in(paths.vocab());
        ds.parsed.vocabulary = read_vocabulary(in);
    }
    {
        std::ifstream in(paths.sequences());
        ds.sequences = read_sequences(in);
    }
    ds.bounds = split_chronological(ds.sequences.size(), SplitSpec{config.split});
    int max_id = -1;
    for (size_t s = 0; s < ds.bounds.train_end; ++s)
        for (int id : ds.sequences[s].template_ids) max_id = std::max(max_id, id);
    ds.train_vocab_size = static_cast<size_t>(max_id + 1);
    return ds;
}

std::optional<WordVectorStore> maybe_store(const PipelineConfig& config) {
    if (config.mode != VectorMode::Semantic) return std::nullopt;
    return WordVectorStore::load(config.word_vectors, config.oov_row);
}

void cmd_parse(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    HeaderPattern header(config.header_regex);
    auto parsed = parse_corpus_file(config.log_file, header, config.parser);
    {
        refuse_overwrite(paths.vocab(), force);
        std::ofstream out(paths.vocab());
        write_vocabulary(out, parsed.vocabulary);
    }
    {
        refuse_overwrite(paths.assignments(), force);
        std::ofstream out(paths.assignments());
        for (int id : parsed.per_line_assignments) out << id << '\n';
    }
    {
        refuse_overwrite(paths.records(), force);
        std::ofstream out(paths.records());
        for (const auto& r : parsed.records) {
            out << r.line_no << '\t'
                << (r.timestamp_ms ? std::to_string(*r.timestamp_ms) : "-") << '\t'
                << (r.group_key ? *r.group_key : "-") << '\n';
        }
    }
    nlohmann::json report = {{"config_hash", config_hash(config)},
                             {"records", parsed.records.size()},
                             {"skipped", parsed.skipped},
                             {"templates", parsed.vocabulary.size()}};
    write_json(paths.parse_report(), report, force);
    log_info("parsed " + std::to_string(parsed.records.size()) + " records, " +
             std::to_string(parsed.vocabulary.size()) + " templates, " +
             std::to_string(parsed.skipped) + " skipped");
}

// Records are re-read from the parse stage's records.tsv, so grouping does
// not depend on the raw log being present.
void cmd_group(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    require_artifact(paths.records(), "parse");
    require_artifact(paths.assignments(), "parse");
    std::vector<RawLogRecord> records;
    {
        std::ifstream in(paths.records());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto t1 = line.find('\t');
            auto t2 = line.find('\t', t1 + 1);
            RawLogRecord r;
            r.line_no = std::stoull(line.substr(0, t1));
            std::string ts = line.substr(t1 + 1, t2 - t1 - 1);
            if (ts != "-") r.timestamp_ms = std::stoll(ts);
            std::string key = line.substr(t2 + 1);
            if (key != "-") r.group_key = key;
            records.push_back(std::move(r));
        }
    }
    std::vector<int> assignments;
    {
        std::ifstream in(paths.assignments());
        std::string line;
        while (std::getline(in, line))
            if (!line.empty() && line != "-1") assignments.push_back(std::stoi(line));
    }
    // line-regex labels need the original content, which records.tsv does
    // not keep; reparse in that case
    std::vector<Label> labels;
    if (config.label_kind == LabelKind::LineRegex) {
        HeaderPattern header(config.header_regex);
        auto parsed = parse_corpus_file(config.log_file, header, config.parser);
        labels = assign_record_labels(config, parsed.records);
    } else {
        labels = assign_record_labels(config, records);
    }
    auto sequences = group(records, assignments, labels, config.grouping);
    refuse_overwrite(paths.sequences(), force);
    std::ofstream out(paths.sequences());
    write_sequences(out, sequences);
    log_info("grouped into " + std::to_string(sequences.size()) + " sequences");
}

void cmd_vectorize(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    auto ds = dataset_from_artifacts(config, paths);
    auto store = maybe_store(config);
    auto vr = vectorize(config, ds, store ? &*store : nullptr);
    write_matrix(paths.vectors(), vr.vectors, force);
    std::string vocab_text;
    for (const auto& t : ds.parsed.vocabulary) vocab_text += t.text() + "\n";
    nlohmann::json meta = {{"config_hash", config_hash(config)},
                           {"mode", to_string(vr.mode)},
                           {"train_vocab_size", vr.train_vocab_size},
                           {"dimension", vr.vectors.cols()},
                           {"content_hash", fnv1a(vocab_text + config.word_vectors)}};
    write_json(paths.vectors_meta(), meta, force);
    log_info("vectorized " + std::to_string(vr.vectors.rows()) + " sequences, dim " +
             std::to_string(vr.vectors.cols()));
}

void cmd_fit(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    require_artifact(paths.vectors(), "vectorize");
    auto ds = dataset_from_artifacts(config, paths);
    Mat vectors = read_matrix(paths.vectors());
    Mat train = vectors.topRows(ds.bounds.train_end);
    refuse_overwrite(paths.model(), force);
    if (config.detector == DetectorKind::Pca) {
        KPolicy policy = config.k ? KPolicy::fixed(*config.k)
                                  : KPolicy::by_variance(config.variance_fraction);
        PcaModel model = fit_pca(train, policy, config.mode);
        model.theta = config.theta_source == ThetaSource::Value && config.theta
                          ? *config.theta
                          : q_statistic_threshold(model, config.alpha);
        save_pca_model(model, paths.model().string());
        log_info("fit PCA model: k=" + std::to_string(model.k) +
                 " theta=" + std::to_string(*model.theta));
    } else {
        std::vector<Vec> normal_train;
        for (size_t i = 0; i < ds.bounds.train_end; ++i)
            if (ds.sequences[i].label == Label::Normal)
                normal_train.push_back(vectors.row(i).transpose());
        ClusterFitOptions options;
        options.max_train = config.max_cluster_train;
        options.subsample_seed = config.seed;
        ClusterModel model = fit_clusters(normal_train, config.delta, config.mode, options);
        save_cluster_model(model, paths.model().string());
        log_info("fit cluster model: " + std::to_string(model.centroids.size()) + " centroids");
    }
}

void cmd_predict(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    require_artifact(paths.model(), "fit");
    require_artifact(paths.vectors(), "vectorize");
    auto ds = dataset_from_artifacts(config, paths);
    Mat vectors = read_matrix(paths.vectors());
    refuse_overwrite(paths.predictions(), force);
    std::ofstream out(paths.predictions());
    out.precision(17);
    if (config.detector == DetectorKind::Pca) {
        PcaModel model = load_pca_model(paths.model().string());
        for (size_t i = 0; i < ds.sequences.size(); ++i) {
            auto p = predict(model, vectors.row(i).transpose());
            out << ds.sequences[i].seq_id << '\t' << to_string(p.label) << '\t' << p.score << '\n';
        }
    } else {
        ClusterModel model = load_cluster_model(paths.model().string());
        for (size_t i = 0; i < ds.sequences.size(); ++i) {
            auto p = predict_cluster(model, vectors.row(i).transpose());
            out << ds.sequences[i].seq_id << '\t' << to_string(p.label) << '\t' << p.score << '\n';
        }
    }
    log_info("wrote " + paths.predictions().string());
}

void print_report_table(const EvaluationReport& r) {
    std::printf("%-16s %-8s %-8s %-8s\n", "Detector", "Prec.", "Recall", "F1");
    std::printf("%-16s %-8.3f %-8.3f %-8.3f\n", r.detector.c_str(), r.precision, r.recall, r.f1);
}

void cmd_evaluate(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    auto ds = dataset_from_artifacts(config, paths);
    auto store = maybe_store(config);
    auto vr = vectorize(config, ds, store ? &*store : nullptr);
    auto result = run_grid_evaluate(config, ds, vr.vectors);
    write_json(paths.report("evaluate"), result.report.to_json(), force);
    {
        refuse_overwrite(paths.grid_log(), force);
        std::ofstream out(paths.grid_log());
        for (const auto& p : result.grid_log) {
            nlohmann::json j = {{"params", p.params}, {"f1", p.f1}};
            if (!p.error.empty()) j["error"] = p.error;
            out << j.dump() << '\n';
        }
    }
    print_report_table(result.report);
}

void cmd_grid_search(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    auto ds = dataset_from_artifacts(config, paths);
    auto store = maybe_store(config);
    auto vr = vectorize(config, ds, store ? &*store : nullptr);
    auto result = run_grid_evaluate(config, ds, vr.vectors);
    nlohmann::json best = {{"config_hash", config_hash(config)},
                           {"best_params", result.report.hyper_params},
                           {"test_f1", result.report.f1}};
    write_json(paths.report("grid_search"), best, force);
    refuse_overwrite(paths.grid_log(), force);
    std::ofstream out(paths.grid_log());
    for (const auto& p : result.grid_log) {
        nlohmann::json j = {{"params", p.params}, {"f1", p.f1}};
        if (!p.error.empty()) j["error"] = p.error;
        out << j.dump() << '\n';
    }
    std::cout << best.dump(2) << "\n";
}

void cmd_stability(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    auto ds = dataset_from_artifacts(config, paths);
    auto store = maybe_store(config);
    auto rows = run_stability(config, ds, store ? &*store : nullptr);
    nlohmann::json j = nlohmann::json::array();
    std::printf("%-8s %-10s %-10s\n", "ratio%", "mean F1", "sigma");
    for (const auto& r : rows) {
        j.push_back({{"ratio_pct", r.ratio_pct},
                     {"mean_f1", r.mean_f1},
                     {"stddev_f1", r.stddev_f1},
                     {"f1_per_repeat", r.f1_per_repeat}});
        std::printf("%-8g %-10.4f %-10.4f\n", r.ratio_pct, r.mean_f1, r.stddev_f1);
    }
    write_json(paths.report("stability"),
               {{"config_hash", config_hash(config)}, {"rows", j}}, force);
}

void cmd_unseen(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    if (config.unseen_targets.empty())
        throw UsageError("unseen experiment needs unseen_targets in the config");
    auto ds = dataset_from_artifacts(config, paths);
    auto store = maybe_store(config);
    auto rows = run_unseen(config, ds, store ? &*store : nullptr);
    nlohmann::json j = nlohmann::json::array();
    std::printf("%-12s %-14s %-8s\n", "subset", "unseen events", "F1");
    for (const auto& r : rows) {
        j.push_back({{"subset_size", r.subset_size},
                     {"unseen_count", r.unseen_count},
                     {"f1", r.f1}});
        std::printf("%-12zu %-14zu %-8.4f\n", r.subset_size, r.unseen_count, r.f1);
    }
    write_json(paths.report("unseen"), {{"config_hash", config_hash(config)}, {"rows", j}},
               force);
}

void cmd_bench(const PipelineConfig& config, bool force) {
    auto paths = run_paths(config);
    auto ds = dataset_from_artifacts(config, paths);
    auto store = maybe_store(config);
    auto vr = vectorize(config, ds, store ? &*store : nullptr);
    auto report = run_bench(config, ds, vr.vectors);
    write_json(paths.report("bench"), report.to_json(), force);
    std::printf("train_time_s=%.4f", *report.train_time_s);
    if (report.predict_time_ms_per_seq)
        std::printf(" predict_time_ms_per_seq=%.5f", *report.predict_time_ms_per_seq);
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SemPCA log anomaly detection pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    bool force = false;
    struct Overrides {
        std::optional<std::string> log_file, word_vectors, mode, detector, output_dir, run_id;
        std::optional<double> theta, variance_fraction, delta, alpha;
        std::optional<int> k;
        std::optional<uint64_t> seed;
    } ov;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "pipeline config JSON")->required();
        cmd->add_flag("--force", force, "overwrite existing artifacts");
        cmd->add_option("--log-file", ov.log_file);
        cmd->add_option("--word-vectors", ov.word_vectors);
        cmd->add_option("--mode", ov.mode, "semantic|count|weighted_count");
        cmd->add_option("--detector", ov.detector, "pca|cluster");
        cmd->add_option("--output-dir", ov.output_dir);
        cmd->add_option("--run-id", ov.run_id);
        cmd->add_option("--theta", ov.theta);
        cmd->add_option("--variance-fraction", ov.variance_fraction);
        cmd->add_option("--delta", ov.delta);
        cmd->add_option("--alpha", ov.alpha);
        cmd->add_option("--k", ov.k);
        cmd->add_option("--seed", ov.seed);
    };

    std::map<std::string, std::function<void(const PipelineConfig&, bool)>> stages = {
        {"parse", cmd_parse},         {"group", cmd_group},
        {"vectorize", cmd_vectorize}, {"fit", cmd_fit},
        {"predict", cmd_predict},     {"evaluate", cmd_evaluate},
        {"grid-search", cmd_grid_search}, {"stability", cmd_stability},
        {"unseen", cmd_unseen},       {"bench", cmd_bench}};
    for (auto& [name, fn] : stages) add_common(app.add_subcommand(name));

    // synthetic corpus generator (fixture tooling, not a pipeline stage)
    auto* synth = app.add_subcommand("synth", "generate the synthetic corpus");
    std::string synth_out = "data/synthetic";
    SyntheticSpec synth_spec;
    bool no_unseen = false;
    synth->add_option("--out", synth_out);
    synth->add_option("--sequences", synth_spec.n_sequences);
    synth->add_option("--seed", synth_spec.seed);
    synth->add_flag("--no-unseen", no_unseen);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            synth_spec.with_unseen = !no_unseen;
            write_synthetic(generate_synthetic(synth_spec), synth_out);
            log_info("wrote synthetic corpus to " + synth_out);
            return 0;
        }
        PipelineConfig config = load_config(config_path);
        if (ov.log_file) config.log_file = *ov.log_file;
        if (ov.word_vectors) config.word_vectors = *ov.word_vectors;
        if (ov.mode) config.mode = vector_mode_from_string(*ov.mode);
        if (ov.detector) {
            if (*ov.detector == "pca") config.detector = DetectorKind::Pca;
            else if (*ov.detector == "cluster") config.detector = DetectorKind::Cluster;
            else throw UsageError("unknown detector: " + *ov.detector);
        }
        if (ov.output_dir) config.output_dir = *ov.output_dir;
        if (ov.run_id) config.run_id = *ov.run_id;
        if (ov.theta) {
            config.theta = *ov.theta;
            config.theta_source = ThetaSource::Value;
        }
        if (ov.variance_fraction) config.variance_fraction = *ov.variance_fraction;
        if (ov.delta) config.delta = *ov.delta;
        if (ov.alpha) config.alpha = *ov.alpha;
        if (ov.k) config.k = *ov.k;
        if (ov.seed) config.seed = *ov.seed;

        for (auto& [name, fn] : stages)
            if (app.get_subcommand(name)->parsed()) {
                fn(config, force);
                return 0;
            }
        throw UsageError("no subcommand selected");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
