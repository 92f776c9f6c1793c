#pragma once

// Deterministic synthetic corpus for desk-scale experiments: 30 normal
// templates in 6 service groups, 5 anomalous templates, and optional
// test-only variant templates so part of the test vocabulary is unseen
// during training. Word vectors place normal words in one half of the
// embedding space and fault words in the other.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sempca/common.hpp"
#include "sempca/parser.hpp"

namespace sempca {

struct SyntheticSpec {
    size_t n_sequences = 5000;
    int seq_len_min = 15;
    int seq_len_max = 25;
    double anomaly_rate_train = 0.005;  // sequences before the validation boundary
    double anomaly_rate_eval = 0.08;   // validation and test regions
    bool with_unseen = true;           // test-only variant templates
    uint64_t seed = 42;
};

struct SyntheticCorpus {
    std::vector<std::string> log_lines;
    std::vector<std::pair<std::string, Label>> block_labels;  // emission order
    std::vector<std::pair<std::string, Vec>> word_vectors;
    std::string header_pattern = R"((?<ts>\d+) (?<key>blk_\d+) (?<content>.*))";
    std::vector<std::pair<std::string, std::string>> masks = {{R"(\b\d+\b)", "<*>"}};
};

namespace synth_detail {

inline const std::vector<std::string>& code_words() {
    static const std::vector<std::string> w = {
        "alpha",  "bravo",   "charlie", "delta",  "echo",   "foxtrot", "golf",   "hotel",
        "india",  "juliett", "kilo",    "lima",   "mike",   "november","oscar",  "papa",
        "quebec", "romeo",   "sierra",  "tango",  "uniform","victor",  "whiskey","xray",
        "yankee", "zulu",    "amber",   "cobalt", "jade",   "onyx"};
    return w;
}

inline const std::vector<std::string>& group_words() {
    static const std::vector<std::string> w = {"disk", "network", "memory", "cache", "auth",
                                               "scheduler"};
    return w;
}

inline const std::vector<std::string>& fault_words() {
    static const std::vector<std::string> w = {"panic", "fatal", "kernel", "abort", "corrupt"};
    return w;
}

// deterministic unit direction in a dimension range
inline Vec unit_dir(int dim, int lo, int hi, uint64_t salt) {
    std::mt19937 rng(static_cast<uint32_t>(0x9e3779b9 ^ salt));
    Vec v = Vec::Zero(dim);
    for (int i = lo; i < hi; ++i)
        v[i] = static_cast<double>(draw_below(rng, 2000)) / 1000.0 - 1.0;
    if (v.norm() == 0.0) v[lo] = 1.0;
    return v / v.norm();
}

}  // namespace synth_detail

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
    using namespace synth_detail;
    const int D = 12;
    SyntheticCorpus corpus;

    // word vectors: normal vocabulary spans dims 0..5 (shared service words
    // on dim 0, group words on dims 1..3, per-template jitter on 4..5),
    // fault vocabulary is axis-aligned on dims 6..11
    for (int g = 0; g < 6; ++g) {
        Vec v = Vec::Zero(D);
        v[1 + g % 3] = g < 3 ? 2.5 : -2.5;
        corpus.word_vectors.emplace_back(group_words()[g], v);
    }
    for (size_t i = 0; i < code_words().size(); ++i)
        corpus.word_vectors.emplace_back(code_words()[i], 0.12 * unit_dir(D, 4, 6, 100 + i));
    auto axis = [D](int dim, double scale) {
        Vec v = Vec::Zero(D);
        v[dim] = scale;
        return v;
    };
    corpus.word_vectors.emplace_back("service", axis(0, 1.2));
    corpus.word_vectors.emplace_back("request", axis(0, 1.0));
    corpus.word_vectors.emplace_back("completed", axis(0, 0.8));
    corpus.word_vectors.emplace_back("code", axis(0, 0.6));
    corpus.word_vectors.emplace_back("error", axis(11, 4.0));
    for (size_t i = 0; i < fault_words().size(); ++i)
        corpus.word_vectors.emplace_back(fault_words()[i], axis(6 + static_cast<int>(i), 4.0));

    // message renderers; <n> below is a live parameter so the parser mines
    // one template per renderer
    auto normal_msg = [&](int i, int64_t n) {
        return code_words()[i % 30] + " " + group_words()[i % 6] +
               " service request completed code " + std::to_string(n);
    };
    auto anomalous_msg = [&](int j, int64_t n) {
        return fault_words()[j % 5] + " kernel panic fatal error abort " + std::to_string(n);
    };
    // variant templates: unseen leading token, same semantics
    auto variant_anomalous_msg = [&](int j, int64_t n) {
        return "vfault" + std::string(1, static_cast<char>('a' + j % 3)) +
               " kernel panic fatal error abort " + std::to_string(n);
    };
    auto variant_normal_msg = [&](int m, int64_t n) {
        return "vcode" + std::string(1, static_cast<char>('a' + m % 2)) + " " +
               group_words()[m % 6] + " service request completed code " + std::to_string(n);
    };

    std::mt19937 rng(static_cast<uint32_t>(spec.seed));
    const size_t n = spec.n_sequences;
    const size_t val_start = n * 6 / 10;
    const size_t test_start = val_start + n / 10;  // variants live in the test region only
    int64_t ts = 1'700'000'000'000;
    int64_t param = 1000;

    for (size_t s = 0; s < n; ++s) {
        const std::string key = "blk_" + std::to_string(s);
        const double rate = s < val_start ? spec.anomaly_rate_train : spec.anomaly_rate_eval;
        const bool anomalous = draw_below(rng, 1000) < static_cast<uint64_t>(rate * 1000);
        const bool in_test = s >= test_start;
        const bool use_variants =
            spec.with_unseen && in_test && anomalous && draw_below(rng, 10) < 6;
        const int len = spec.seq_len_min +
                        static_cast<int>(draw_below(
                            rng, static_cast<uint64_t>(spec.seq_len_max - spec.seq_len_min + 1)));
        const int group = static_cast<int>(draw_below(rng, 6));
        const int n_anom = anomalous ? 5 + static_cast<int>(draw_below(rng, 4)) : 0;
        const int fault_kind = static_cast<int>(draw_below(rng, 5));  // one fault per sequence
        // anomalous messages at random positions
        std::vector<bool> is_anom(len, false);
        if (n_anom > 0) {
            std::mt19937 pos_rng(static_cast<uint32_t>(spec.seed ^ (s * 2654435761u)));
            for (size_t p : sample_without_replacement(pos_rng, len, std::min(n_anom, len)))
                is_anom[p] = true;
        }
        for (int m = 0; m < len; ++m) {
            std::string content;
            if (is_anom[m]) {
                content = use_variants ? variant_anomalous_msg(fault_kind, param)
                                       : anomalous_msg(fault_kind, param);
            } else {
                // mostly this sequence's group, sometimes any template
                int i = draw_below(rng, 10) < 7
                            ? group + 6 * static_cast<int>(draw_below(rng, 5))
                            : static_cast<int>(draw_below(rng, 30));
                bool variant_normal = spec.with_unseen && in_test && !anomalous &&
                                      draw_below(rng, 100) < 5;
                content = variant_normal ? variant_normal_msg(i, param) : normal_msg(i, param);
            }
            ++param;
            ts += 1 + static_cast<int64_t>(draw_below(rng, 50));
            corpus.log_lines.push_back(std::to_string(ts) + " " + key + " " + content);
        }
        corpus.block_labels.emplace_back(key, anomalous ? Label::Anomalous : Label::Normal);
    }
    return corpus;
}

inline void write_synthetic(const SyntheticCorpus& corpus, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(dir + "/log.txt");
        for (const auto& line : corpus.log_lines) out << line << '\n';
    }
    {
        std::ofstream out(dir + "/labels.csv");
        for (const auto& [key, label] : corpus.block_labels)
            out << key << ',' << (label == Label::Anomalous ? "anomaly" : "normal") << '\n';
    }
    {
        std::ofstream out(dir + "/vectors.txt");
        out.precision(17);
        for (const auto& [word, v] : corpus.word_vectors) {
            out << word;
            for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
            out << '\n';
        }
    }
}

}  // namespace sempca
