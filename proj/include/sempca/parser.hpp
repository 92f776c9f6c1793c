#pragma once

// Fixed-depth parse-tree template miner (Drain-style).
// Level 0 splits by token count, levels 1..depth-2 by leading tokens
// (tokens containing digits route as wildcards), leaves hold template
// groups matched by positional similarity.

#include <boost/regex.hpp>
#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sempca/common.hpp"

namespace sempca {

inline const std::string kWildcard = "<*>";

struct RawLogRecord {
    size_t line_no = 0;
    std::optional<int64_t> timestamp_ms;
    std::optional<std::string> group_key;
    std::string content;
};

struct LogTemplate {
    int template_id = -1;
    std::vector<std::string> tokens;

    size_t token_count() const { return tokens.size(); }

    std::string text() const {
        std::string s;
        for (size_t i = 0; i < tokens.size(); ++i) {
            if (i) s += ' ';
            s += tokens[i];
        }
        return s;
    }
};

struct ParserConfig {
    int tree_depth = 4;  // >= 3: root + token-count level + >=1 token level
    double similarity_threshold = 0.4;
    int max_children = 100;
    // applied in order to content before tokenization
    std::vector<std::pair<std::string, std::string>> variable_masks;

    void validate() const {
        if (tree_depth < 3) throw UsageError("tree_depth must be >= 3");
        if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0))
            throw UsageError("similarity_threshold must be in (0,1]");
        if (max_children < 1) throw UsageError("max_children must be >= 1");
    }
};

// sim(a,b) = #equal positions / token_count, over equal-length sequences
inline double token_similarity(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
    if (a.size() != b.size() || a.empty()) return 0.0;
    size_t eq = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++eq;
    return static_cast<double>(eq) / static_cast<double>(a.size());
}

inline bool token_has_digit(const std::string& t) {
    return std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); });
}

inline std::vector<std::string> split_whitespace(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(std::move(tok));
    return out;
}

class ParseTree {
public:
    explicit ParseTree(ParserConfig config) : config_(std::move(config)) {
        config_.validate();
        for (const auto& [pat, repl] : config_.variable_masks)
            masks_.emplace_back(boost::regex(pat), repl);
    }

    const ParserConfig& config() const { return config_; }
    const std::vector<LogTemplate>& vocabulary() const { return vocab_; }

    std::vector<std::string> mask_and_tokenize(const std::string& content) const {
        std::string masked = content;
        for (const auto& [re, repl] : masks_)
            masked = boost::regex_replace(masked, re, repl);
        return split_whitespace(masked);
    }

    // Returns the id of the matched-or-created template; merges differing
    // positions into wildcards on a similarity match.
    int parse_line(const RawLogRecord& record) {
        auto tokens = mask_and_tokenize(record.content);
        if (tokens.empty())
            throw DataError("empty message after masking at line " + std::to_string(record.line_no));

        Node& leaf = route_to_leaf(tokens);

        int best_id = -1;
        double best_sim = -1.0;
        for (int id : leaf.template_ids) {
            double sim = token_similarity(vocab_[id].tokens, tokens);
            if (sim > best_sim) {
                best_sim = sim;
                best_id = id;
            }
        }
        if (best_id >= 0 && best_sim >= config_.similarity_threshold) {
            merge(vocab_[best_id], tokens);
            return best_id;
        }
        int id = static_cast<int>(vocab_.size());
        vocab_.push_back(LogTemplate{id, tokens});
        leaf.template_ids.push_back(id);
        return id;
    }

private:
    struct Node {
        std::map<std::string, std::unique_ptr<Node>> children;
        std::vector<int> template_ids;  // leaves only
    };

    Node& route_to_leaf(const std::vector<std::string>& tokens) {
        Node* node = &root_;
        node = child(*node, std::to_string(tokens.size()));
        const int token_levels = config_.tree_depth - 2;
        const int steps = std::min<int>(token_levels, static_cast<int>(tokens.size()));
        for (int i = 0; i < steps; ++i) {
            const std::string& tok = token_has_digit(tokens[i]) ? kWildcard : tokens[i];
            node = child(*node, tok);
        }
        return *node;
    }

    Node* child(Node& node, const std::string& key) {
        auto it = node.children.find(key);
        if (it != node.children.end()) return it->second.get();
        // full node overflows into the wildcard child
        if (static_cast<int>(node.children.size()) >= config_.max_children) {
            auto wc = node.children.find(kWildcard);
            if (wc != node.children.end()) return wc->second.get();
            return node.children.emplace(kWildcard, std::make_unique<Node>()).first->second.get();
        }
        return node.children.emplace(key, std::make_unique<Node>()).first->second.get();
    }

    static void merge(LogTemplate& tmpl, const std::vector<std::string>& tokens) {
        for (size_t i = 0; i < tmpl.tokens.size(); ++i)
            if (tmpl.tokens[i] != tokens[i]) tmpl.tokens[i] = kWildcard;
    }

    ParserConfig config_;
    std::vector<std::pair<boost::regex, std::string>> masks_;
    std::vector<LogTemplate> vocab_;
    Node root_;
};

struct HeaderPattern {
    boost::regex re;
    bool has_timestamp = false;
    bool has_key = false;

    explicit HeaderPattern(const std::string& pattern) : re(pattern) {
        if (!names_group(pattern, "content"))
            throw UsageError("header pattern must define a (?<content>...) group");
        has_timestamp = names_group(pattern, "ts");
        has_key = names_group(pattern, "key");
    }

private:
    static bool names_group(const std::string& pattern, const std::string& name) {
        return pattern.find("(?<" + name + ">") != std::string::npos ||
               pattern.find("(?P<" + name + ">") != std::string::npos ||
               pattern.find("(?'" + name + "'") != std::string::npos;
    }
};

// Returns nullopt when the line does not match (caller counts the skip).
inline std::optional<RawLogRecord> strip_header(const std::string& raw_line, size_t line_no,
                                                const HeaderPattern& header) {
    boost::smatch m;
    if (!boost::regex_match(raw_line, m, header.re)) return std::nullopt;
    RawLogRecord rec;
    rec.line_no = line_no;
    rec.content = m["content"].str();
    if (rec.content.empty()) return std::nullopt;
    if (header.has_timestamp && m["ts"].matched) rec.timestamp_ms = std::stoll(m["ts"].str());
    if (header.has_key && m["key"].matched) rec.group_key = m["key"].str();
    return rec;
}

struct ParseResult {
    std::vector<LogTemplate> vocabulary;
    std::vector<int> assignments;          // per non-skipped record
    std::vector<int> per_line_assignments; // per input line, -1 for skipped
    std::vector<RawLogRecord> records;     // non-skipped, input order
    size_t skipped = 0;
};

inline ParseResult parse_corpus(std::istream& in, const HeaderPattern& header,
                                const ParserConfig& config) {
    ParseTree tree(config);
    ParseResult result;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto rec = strip_header(line, line_no, header);
        if (!rec) {
            ++result.skipped;
            result.per_line_assignments.push_back(-1);
            continue;
        }
        int id = tree.parse_line(*rec);
        result.assignments.push_back(id);
        result.per_line_assignments.push_back(id);
        result.records.push_back(std::move(*rec));
    }
    result.vocabulary = tree.vocabulary();
    return result;
}

inline ParseResult parse_corpus_file(const std::string& path, const HeaderPattern& header,
                                     const ParserConfig& config) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open log file: " + path);
    return parse_corpus(in, header, config);
}

// Vocabulary file: "<template_id>\t<tokens joined by spaces>", one per line.
inline void write_vocabulary(std::ostream& out, const std::vector<LogTemplate>& vocab) {
    for (const auto& t : vocab) out << t.template_id << '\t' << t.text() << '\n';
}

inline std::vector<LogTemplate> read_vocabulary(std::istream& in) {
    std::vector<LogTemplate> vocab;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw DataError("malformed vocabulary line: " + line);
        LogTemplate t;
        t.template_id = std::stoi(line.substr(0, tab));
        t.tokens = split_whitespace(line.substr(tab + 1));
        if (t.template_id != static_cast<int>(vocab.size()))
            throw DataError("vocabulary ids must be dense and in order");
        vocab.push_back(std::move(t));
    }
    return vocab;
}

}  // namespace sempca
