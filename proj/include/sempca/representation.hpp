#pragma once

// Vector representations of templates and sequences: TF-IDF-weighted
// word-vector aggregation for semantic mode, raw and IDF-weighted event
// counts for the baseline modes.

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sempca/common.hpp"
#include "sempca/grouper.hpp"
#include "sempca/parser.hpp"

namespace sempca {

class WordVectorStore {
public:
    WordVectorStore(int dimension, Vec oov)
        : dim_(dimension), oov_(std::move(oov)) {
        if (oov_.size() != dim_) throw UsageError("oov vector dimension mismatch");
    }

    explicit WordVectorStore(int dimension)
        : WordVectorStore(dimension, Vec::Zero(dimension)) {}

    int dimension() const { return dim_; }
    size_t size() const { return table_.size(); }
    const Vec& oov() const { return oov_; }

    void insert(const std::string& token, Vec v) {
        if (v.size() != dim_) throw DataError("word vector dimension mismatch for " + token);
        table_[token] = std::move(v);
    }

    const Vec& lookup(const std::string& token) const {
        auto it = table_.find(token);
        return it == table_.end() ? oov_ : it->second;
    }

    bool contains(const std::string& token) const { return table_.count(token) > 0; }

    // Text format: "token v1 ... vD" per line; optional "N D" header line.
    // If the store contains an "<oov>" row and use_oov_row is set, unknown
    // tokens resolve to it instead of zeros.
    static WordVectorStore load(const std::string& path, bool use_oov_row = false) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open word-vector file: " + path);
        std::string line;
        std::vector<std::pair<std::string, Vec>> rows;
        int dim = -1;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto toks = split_whitespace(line);
            if (first) {
                first = false;
                if (toks.size() == 2 && !token_has_alpha(toks[0]) && !token_has_alpha(toks[1]))
                    continue;  // "N D" header
            }
            if (toks.size() < 2) throw DataError("malformed word-vector line: " + line);
            Vec v(toks.size() - 1);
            for (size_t i = 1; i < toks.size(); ++i) v[i - 1] = std::stod(toks[i]);
            if (dim < 0) dim = static_cast<int>(v.size());
            else if (v.size() != dim)
                throw DataError("inconsistent word-vector dimension at token " + toks[0]);
            rows.emplace_back(toks[0], std::move(v));
        }
        if (dim < 0) throw DataError("empty word-vector file: " + path);
        WordVectorStore store(dim);
        for (auto& [tok, v] : rows) store.insert(tok, std::move(v));
        if (use_oov_row) {
            auto it = store.table_.find("<oov>");
            if (it == store.table_.end())
                throw DataError("word-vector file has no <oov> row: " + path);
            store.oov_ = it->second;
        }
        return store;
    }

private:
    static bool token_has_alpha(const std::string& t) {
        for (unsigned char c : t)
            if (std::isalpha(c)) return true;
        return false;
    }

    int dim_;
    Vec oov_;
    std::unordered_map<std::string, Vec> table_;
};

// Lowercase alphabetic words: wildcards and pure-number tokens drop out,
// camelCase / snake_case / punctuation boundaries split.
inline std::vector<std::string> tokenize_template(const LogTemplate& tmpl) {
    std::vector<std::string> words;
    for (const auto& tok : tmpl.tokens) {
        if (tok == kWildcard) continue;
        std::string word;
        auto flush = [&] {
            if (!word.empty()) {
                words.push_back(word);
                word.clear();
            }
        };
        for (size_t i = 0; i < tok.size(); ++i) {
            unsigned char c = tok[i];
            if (!std::isalpha(c)) {
                flush();
                continue;
            }
            if (std::isupper(c) && !word.empty()) {
                unsigned char prev = tok[i - 1];
                unsigned char next = i + 1 < tok.size() ? tok[i + 1] : '\0';
                // aB | ABc boundaries
                if (std::islower(prev) || (std::isupper(prev) && std::islower(next))) flush();
            }
            word += static_cast<char>(std::tolower(c));
        }
        flush();
    }
    return words;
}

// TF(w) = #w / L_e over the tokenized word list
inline double tf(const std::string& word, const std::vector<std::string>& event_tokens) {
    if (event_tokens.empty()) throw DataError("tf over empty token list");
    size_t count = 0;
    for (const auto& t : event_tokens)
        if (t == word) ++count;
    return static_cast<double>(count) / static_cast<double>(event_tokens.size());
}

struct IdfTable {
    size_t total_events = 0;
    std::unordered_map<std::string, size_t> doc_counts;
    bool smoothed = true;  // strict mode uses log(#E/#E_w) and rejects unseen words

    static IdfTable build(const std::vector<LogTemplate>& train_templates, bool smoothed = true) {
        IdfTable table;
        table.smoothed = smoothed;
        table.total_events = train_templates.size();
        for (const auto& t : train_templates) {
            auto words = tokenize_template(t);
            std::sort(words.begin(), words.end());
            words.erase(std::unique(words.begin(), words.end()), words.end());
            for (const auto& w : words) ++table.doc_counts[w];
        }
        return table;
    }
};

inline double idf(const std::string& word, const IdfTable& table) {
    if (table.total_events == 0) throw DataError("idf over empty event set");
    auto it = table.doc_counts.find(word);
    size_t ew = it == table.doc_counts.end() ? 0 : it->second;
    if (table.smoothed)
        return std::log(static_cast<double>(table.total_events + 1) /
                        static_cast<double>(ew + 1));
    if (ew == 0) throw DataError("strict idf: word never seen in training events: " + word);
    return std::log(static_cast<double>(table.total_events) / static_cast<double>(ew));
}

struct EventVector {
    int template_id = -1;
    Vec values;
};

// V(e) = sum over word positions of word_vector * TF * IDF.
// Total over any template: one with no surviving words falls back to the
// store's OOV vector, so unseen templates always vectorize.
inline EventVector embed_event(const LogTemplate& tmpl, const WordVectorStore& store,
                               const IdfTable& table) {
    auto words = tokenize_template(tmpl);
    EventVector ev{tmpl.template_id, Vec::Zero(store.dimension())};
    if (words.empty()) {
        ev.values = store.oov();
        return ev;
    }
    for (const auto& w : words)
        ev.values += store.lookup(w) * (tf(w, words) * idf(w, table));
    if (!ev.values.allFinite()) throw DataError("non-finite event vector for template " +
                                                std::to_string(tmpl.template_id));
    return ev;
}

struct SequenceVector {
    size_t seq_id = 0;
    Vec values;
};

class EventVectorCache {
public:
    EventVectorCache(const std::vector<LogTemplate>& vocabulary, const WordVectorStore& store,
                     const IdfTable& table)
        : vocab_(&vocabulary), store_(&store), table_(&table),
          cache_(vocabulary.size()) {}

    const Vec& get(int template_id) const {
        if (template_id < 0 || template_id >= static_cast<int>(vocab_->size()))
            throw DataError("template id out of range: " + std::to_string(template_id));
        auto& slot = cache_[template_id];
        if (!slot) slot = embed_event((*vocab_)[template_id], *store_, *table_).values;
        return *slot;
    }

    int dimension() const { return store_->dimension(); }

private:
    const std::vector<LogTemplate>* vocab_;
    const WordVectorStore* store_;
    const IdfTable* table_;
    mutable std::vector<std::optional<Vec>> cache_;
};

// Sequence vector by addition of member event vectors, with multiplicity.
inline SequenceVector embed_sequence(const LogSequence& seq, const EventVectorCache& cache) {
    SequenceVector sv{seq.seq_id, Vec::Zero(cache.dimension())};
    for (int id : seq.template_ids) sv.values += cache.get(id);
    return sv;
}

// Entry j = occurrences of training template j; unseen ids (>= vocab size)
// are ignored.
inline SequenceVector count_vector(const LogSequence& seq, size_t train_vocab_size) {
    SequenceVector sv{seq.seq_id, Vec::Zero(static_cast<Eigen::Index>(train_vocab_size))};
    for (int id : seq.template_ids)
        if (id >= 0 && id < static_cast<int>(train_vocab_size)) sv.values[id] += 1.0;
    return sv;
}

// weight(e) = log(N_seq / n_seq_containing_e) / log(N_seq), in [0,1]
inline std::vector<double> idf_event_weights(const std::vector<LogSequence>& train_sequences,
                                             size_t train_vocab_size) {
    const size_t n = train_sequences.size();
    if (n == 0) throw DataError("cannot compute event weights on empty training set");
    std::vector<size_t> containing(train_vocab_size, 0);
    for (const auto& seq : train_sequences) {
        std::vector<int> distinct(seq.template_ids);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (int id : distinct)
            if (id >= 0 && id < static_cast<int>(train_vocab_size)) ++containing[id];
    }
    std::vector<double> weights(train_vocab_size, 0.0);
    const double denom = std::log(static_cast<double>(n));
    if (denom == 0.0) return weights;  // single training sequence: all weights 0
    for (size_t e = 0; e < train_vocab_size; ++e) {
        size_t ne = std::max<size_t>(containing[e], 1);  // ids absent from training count as 1
        weights[e] = std::log(static_cast<double>(n) / static_cast<double>(ne)) / denom;
    }
    return weights;
}

inline SequenceVector weighted_count_vector(const LogSequence& seq,
                                            const std::vector<double>& weights) {
    SequenceVector sv = count_vector(seq, weights.size());
    for (Eigen::Index j = 0; j < sv.values.size(); ++j) sv.values[j] *= weights[j];
    return sv;
}

}  // namespace sempca
