#pragma once

// Assembles per-message template assignments into labeled sequences:
// session windows keyed by an opaque id, tumbling fixed-count windows,
// tumbling fixed-time windows, and fixed-count windows within sessions.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sempca/common.hpp"
#include "sempca/parser.hpp"

namespace sempca {

struct LogSequence {
    size_t seq_id = 0;
    std::vector<int> template_ids;
    Label label = Label::Unlabeled;
    std::string group_key;
    std::optional<int64_t> start_time_ms;
};

enum class WindowKind { Session, FixedCount, FixedTime, SessionFixedCount };

struct GroupingStrategy {
    WindowKind kind = WindowKind::Session;
    int64_t window = 0;  // message count (FixedCount) or minutes (FixedTime)

    void validate() const {
        if (kind != WindowKind::Session && window < 1)
            throw UsageError("window must be >= 1 for fixed windows");
    }
};

inline Label label_sequence(const std::vector<Label>& member_labels) {
    if (member_labels.empty()) throw DataError("cannot label an empty sequence");
    bool any_unlabeled = false;
    for (Label l : member_labels) {
        if (l == Label::Anomalous) return Label::Anomalous;
        if (l == Label::Unlabeled) any_unlabeled = true;
    }
    return any_unlabeled ? Label::Unlabeled : Label::Normal;
}

namespace detail {

inline void emit(std::vector<LogSequence>& out, const std::string& key,
                 std::vector<int> ids, std::vector<Label> labels,
                 std::optional<int64_t> start) {
    LogSequence seq;
    seq.seq_id = out.size();
    seq.template_ids = std::move(ids);
    seq.label = label_sequence(labels);
    seq.group_key = key;
    seq.start_time_ms = start;
    out.push_back(std::move(seq));
}

inline void chunk_fixed(std::vector<LogSequence>& out, const std::string& key,
                        const std::vector<int>& ids, const std::vector<Label>& labels,
                        const std::vector<std::optional<int64_t>>& times, int64_t window) {
    for (size_t i = 0; i < ids.size(); i += window) {
        size_t end = std::min(ids.size(), i + static_cast<size_t>(window));
        emit(out, key,
             {ids.begin() + i, ids.begin() + end},
             {labels.begin() + i, labels.begin() + end}, times[i]);
    }
}

}  // namespace detail

// records/assignments/labels are parallel arrays over non-skipped records.
inline std::vector<LogSequence> group(const std::vector<RawLogRecord>& records,
                                      const std::vector<int>& assignments,
                                      const std::vector<Label>& labels,
                                      const GroupingStrategy& strategy) {
    strategy.validate();
    if (records.size() != assignments.size() || records.size() != labels.size())
        throw DataError("records, assignments and labels must align");

    std::vector<LogSequence> out;
    const size_t n = records.size();

    auto require_key = [&](size_t i) -> const std::string& {
        if (!records[i].group_key)
            throw DataError("record at line " + std::to_string(records[i].line_no) +
                            " has no group key");
        return *records[i].group_key;
    };
    auto require_time = [&](size_t i) -> int64_t {
        if (!records[i].timestamp_ms)
            throw DataError("record at line " + std::to_string(records[i].line_no) +
                            " has no timestamp");
        return *records[i].timestamp_ms;
    };

    switch (strategy.kind) {
        case WindowKind::FixedCount: {
            std::vector<int> ids;
            std::vector<Label> lbls;
            std::optional<int64_t> start;
            for (size_t i = 0; i < n; ++i) {
                if (ids.empty()) start = records[i].timestamp_ms;
                ids.push_back(assignments[i]);
                lbls.push_back(labels[i]);
                if (static_cast<int64_t>(ids.size()) == strategy.window) {
                    detail::emit(out, "", std::move(ids), std::move(lbls), start);
                    ids.clear();
                    lbls.clear();
                }
            }
            if (!ids.empty()) detail::emit(out, "", std::move(ids), std::move(lbls), start);
            break;
        }
        case WindowKind::FixedTime: {
            const int64_t span = strategy.window * 60'000;
            std::vector<int> ids;
            std::vector<Label> lbls;
            int64_t window_start = 0;
            for (size_t i = 0; i < n; ++i) {
                int64_t t = require_time(i);
                if (ids.empty()) {
                    window_start = (i == 0) ? t : window_start;
                    while (t >= window_start + span) window_start += span;  // skip empty windows
                } else if (t >= window_start + span) {
                    detail::emit(out, "", std::move(ids), std::move(lbls), window_start);
                    ids.clear();
                    lbls.clear();
                    while (t >= window_start + span) window_start += span;
                }
                ids.push_back(assignments[i]);
                lbls.push_back(labels[i]);
            }
            if (!ids.empty()) detail::emit(out, "", std::move(ids), std::move(lbls), window_start);
            break;
        }
        case WindowKind::Session:
        case WindowKind::SessionFixedCount: {
            // key order = first appearance
            std::vector<std::string> key_order;
            std::map<std::string, size_t> key_index;
            std::vector<std::vector<int>> ids_by_key;
            std::vector<std::vector<Label>> lbls_by_key;
            std::vector<std::vector<std::optional<int64_t>>> times_by_key;
            for (size_t i = 0; i < n; ++i) {
                const std::string& key = require_key(i);
                auto [it, inserted] = key_index.try_emplace(key, key_order.size());
                if (inserted) {
                    key_order.push_back(key);
                    ids_by_key.emplace_back();
                    lbls_by_key.emplace_back();
                    times_by_key.emplace_back();
                }
                ids_by_key[it->second].push_back(assignments[i]);
                lbls_by_key[it->second].push_back(labels[i]);
                times_by_key[it->second].push_back(records[i].timestamp_ms);
            }
            for (size_t k = 0; k < key_order.size(); ++k) {
                if (strategy.kind == WindowKind::Session) {
                    detail::emit(out, key_order[k], std::move(ids_by_key[k]),
                                 std::move(lbls_by_key[k]), times_by_key[k].front());
                } else {
                    detail::chunk_fixed(out, key_order[k], ids_by_key[k], lbls_by_key[k],
                                        times_by_key[k], strategy.window);
                }
            }
            break;
        }
    }
    return out;
}

// Sequences file: "<seq_id>\t<label>\t<space-separated template_ids>"
inline void write_sequences(std::ostream& out, const std::vector<LogSequence>& seqs) {
    for (const auto& s : seqs) {
        out << s.seq_id << '\t' << to_string(s.label) << '\t';
        for (size_t i = 0; i < s.template_ids.size(); ++i) {
            if (i) out << ' ';
            out << s.template_ids[i];
        }
        out << '\n';
    }
}

inline std::vector<LogSequence> read_sequences(std::istream& in) {
    std::vector<LogSequence> seqs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw DataError("malformed sequence line: " + line);
        LogSequence s;
        s.seq_id = std::stoull(line.substr(0, t1));
        s.label = label_from_string(line.substr(t1 + 1, t2 - t1 - 1));
        for (const auto& tok : split_whitespace(line.substr(t2 + 1)))
            s.template_ids.push_back(std::stoi(tok));
        seqs.push_back(std::move(s));
    }
    return seqs;
}

}  // namespace sempca
