#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "sempca/grouper.hpp"

using namespace sempca;

namespace {

struct Corpus {
    std::vector<RawLogRecord> records;
    std::vector<int> assignments;
    std::vector<Label> labels;

    void add(int template_id, std::optional<std::string> key = std::nullopt,
             std::optional<int64_t> ts = std::nullopt, Label label = Label::Normal) {
        RawLogRecord r;
        r.line_no = records.size() + 1;
        r.group_key = std::move(key);
        r.timestamp_ms = ts;
        records.push_back(std::move(r));
        assignments.push_back(template_id);
        labels.push_back(label);
    }
};

}  // namespace

TEST_CASE("sequence label precedence: anomalous > unlabeled > normal") {
    CHECK(label_sequence({Label::Normal, Label::Normal}) == Label::Normal);
    CHECK(label_sequence({Label::Normal, Label::Unlabeled}) == Label::Unlabeled);
    CHECK(label_sequence({Label::Unlabeled, Label::Anomalous, Label::Normal}) ==
          Label::Anomalous);
    CHECK_THROWS_AS(label_sequence({}), DataError);
}

TEST_CASE("fixed-count windows chunk the stream with a short tail") {
    Corpus c;
    for (int i = 0; i < 5; ++i) c.add(i);
    auto seqs = group(c.records, c.assignments, c.labels, {WindowKind::FixedCount, 2});
    REQUIRE(seqs.size() == 3);
    CHECK(seqs[0].template_ids == std::vector<int>{0, 1});
    CHECK(seqs[1].template_ids == std::vector<int>{2, 3});
    CHECK(seqs[2].template_ids == std::vector<int>{4});
    for (size_t i = 0; i < seqs.size(); ++i) CHECK(seqs[i].seq_id == i);
}

TEST_CASE("session windows group by key in first-appearance order") {
    Corpus c;
    c.add(0, "a");
    c.add(1, "a");
    c.add(2, "b");
    c.add(3, "a", std::nullopt, Label::Anomalous);
    auto seqs = group(c.records, c.assignments, c.labels, {WindowKind::Session, 0});
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].group_key == "a");
    CHECK(seqs[0].template_ids == std::vector<int>{0, 1, 3});
    CHECK(seqs[0].label == Label::Anomalous);
    CHECK(seqs[1].group_key == "b");
    CHECK(seqs[1].label == Label::Normal);
}

TEST_CASE("session grouping requires keys") {
    Corpus c;
    c.add(0);
    CHECK_THROWS_AS(group(c.records, c.assignments, c.labels, {WindowKind::Session, 0}),
                    DataError);
}

TEST_CASE("fixed-time windows tumble from the first timestamp") {
    Corpus c;
    // one-minute windows: [0, 60s) and [60s, 120s)
    c.add(0, std::nullopt, 0);
    c.add(1, std::nullopt, 30'000);
    c.add(2, std::nullopt, 61'000);
    auto seqs = group(c.records, c.assignments, c.labels, {WindowKind::FixedTime, 1});
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].template_ids == std::vector<int>{0, 1});
    CHECK(seqs[1].template_ids == std::vector<int>{2});
    CHECK(seqs[0].start_time_ms == 0);
    CHECK(seqs[1].start_time_ms == 60'000);
}

TEST_CASE("fixed-time grouping skips empty windows") {
    Corpus c;
    c.add(0, std::nullopt, 0);
    c.add(1, std::nullopt, 5 * 60'000 + 10'000);  // four empty windows in between
    auto seqs = group(c.records, c.assignments, c.labels, {WindowKind::FixedTime, 1});
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[1].start_time_ms == 5 * 60'000);
}

TEST_CASE("fixed-time grouping requires timestamps") {
    Corpus c;
    c.add(0);
    CHECK_THROWS_AS(group(c.records, c.assignments, c.labels, {WindowKind::FixedTime, 1}),
                    DataError);
}

TEST_CASE("session plus fixed-count composition chunks inside each session") {
    Corpus c;
    // key a gets 120 messages, b gets 10, c gets 50; window 50 inside sessions
    for (int i = 0; i < 120; ++i) c.add(0, "a");
    for (int i = 0; i < 10; ++i) c.add(1, "b");
    for (int i = 0; i < 50; ++i) c.add(2, "c");
    auto seqs = group(c.records, c.assignments, c.labels, {WindowKind::SessionFixedCount, 50});
    std::vector<size_t> sizes;
    for (const auto& s : seqs) sizes.push_back(s.template_ids.size());
    CHECK(sizes == std::vector<size_t>{50, 50, 20, 10, 50});
    CHECK(seqs[0].group_key == "a");
    CHECK(seqs[3].group_key == "b");
}

TEST_CASE("grouping preserves every record exactly once, in order") {
    Corpus c;
    for (int i = 0; i < 23; ++i) c.add(i, "k" + std::to_string(i % 3));
    for (auto kind : {WindowKind::Session, WindowKind::FixedCount, WindowKind::SessionFixedCount}) {
        int64_t window = kind == WindowKind::Session ? 0 : 4;
        auto seqs = group(c.records, c.assignments, c.labels, {kind, window});
        std::vector<int> flat;
        for (const auto& s : seqs) flat.insert(flat.end(), s.template_ids.begin(),
                                               s.template_ids.end());
        std::sort(flat.begin(), flat.end());
        std::vector<int> expect(23);
        std::iota(expect.begin(), expect.end(), 0);
        CHECK(flat == expect);
    }
}

TEST_CASE("fixed windows need a positive window size") {
    Corpus c;
    c.add(0);
    CHECK_THROWS_AS(group(c.records, c.assignments, c.labels, {WindowKind::FixedCount, 0}),
                    UsageError);
}

TEST_CASE("misaligned inputs are rejected") {
    Corpus c;
    c.add(0, "a");
    auto labels = c.labels;
    labels.push_back(Label::Normal);
    CHECK_THROWS_AS(group(c.records, c.assignments, labels, {WindowKind::Session, 0}), DataError);
}

TEST_CASE("sequences file round-trips") {
    std::vector<LogSequence> seqs(2);
    seqs[0].seq_id = 0;
    seqs[0].label = Label::Normal;
    seqs[0].template_ids = {3, 1, 3};
    seqs[1].seq_id = 1;
    seqs[1].label = Label::Anomalous;
    seqs[1].template_ids = {7};
    std::ostringstream out;
    write_sequences(out, seqs);
    CHECK(out.str() == "0\tnormal\t3 1 3\n1\tanomalous\t7\n");
    std::istringstream in(out.str());
    auto back = read_sequences(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].template_ids == seqs[0].template_ids);
    CHECK(back[1].label == Label::Anomalous);
}
