#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "sempca/parser.hpp"

using namespace sempca;

static ParserConfig default_config() {
    ParserConfig c;
    c.variable_masks = {{R"(\b\d+\b)", "<*>"}};
    return c;
}

static RawLogRecord rec(size_t line_no, const std::string& content) {
    RawLogRecord r;
    r.line_no = line_no;
    r.content = content;
    return r;
}

TEST_CASE("token similarity counts equal positions") {
    CHECK(token_similarity({"send", "5", "packets"}, {"send", "9", "packets"}) ==
          Catch::Approx(2.0 / 3.0));
    CHECK(token_similarity({"a", "b"}, {"a", "b"}) == 1.0);
    CHECK(token_similarity({"a"}, {"a", "b"}) == 0.0);  // length mismatch
    CHECK(token_similarity({}, {}) == 0.0);
}

TEST_CASE("header pattern extracts named groups") {
    HeaderPattern h(R"((?<ts>\d+) (?<key>blk_\d+) (?<content>.*))");
    auto r = strip_header("123 blk_7 Receiving block", 4, h);
    REQUIRE(r);
    CHECK(r->line_no == 4);
    CHECK(r->timestamp_ms == 123);
    CHECK(r->group_key == "blk_7");
    CHECK(r->content == "Receiving block");

    CHECK_FALSE(strip_header("no match here", 1, h));
    CHECK_FALSE(strip_header("123 blk_7 ", 1, h));  // empty content
}

TEST_CASE("header pattern without content group is rejected") {
    CHECK_THROWS_AS(HeaderPattern(R"((\d+) (.*))"), UsageError);
}

TEST_CASE("identity header pattern keeps the whole line") {
    HeaderPattern h(R"((?<content>.*))");
    auto r = strip_header("hello world", 1, h);
    REQUIRE(r);
    CHECK(r->content == "hello world");
    CHECK_FALSE(r->timestamp_ms);
    CHECK_FALSE(r->group_key);
}

TEST_CASE("similar lines merge into one template with wildcards") {
    ParseTree tree(default_config());
    int a = tree.parse_line(rec(1, "send 5 packets to node7"));
    int b = tree.parse_line(rec(2, "send 9 packets to node8"));
    CHECK(a == b);
    REQUIRE(tree.vocabulary().size() == 1);
    // digits are masked before tokenization, the node ids merge to a wildcard
    CHECK(tree.vocabulary()[0].text() == "send <*> packets to <*>");
}

TEST_CASE("dissimilar lines of equal length become separate templates") {
    ParserConfig c = default_config();
    c.similarity_threshold = 0.9;
    ParseTree tree(c);
    int a = tree.parse_line(rec(1, "alpha beta gamma delta epsilon"));
    int b = tree.parse_line(rec(2, "alpha zeta eta theta iota"));
    CHECK(a != b);
    CHECK(tree.vocabulary().size() == 2);
}

TEST_CASE("different token counts never share a template") {
    ParseTree tree(default_config());
    int a = tree.parse_line(rec(1, "connection closed"));
    int b = tree.parse_line(rec(2, "connection closed by peer"));
    CHECK(a != b);
}

TEST_CASE("template ids are dense and assigned in first-seen order") {
    ParseTree tree(default_config());
    std::vector<std::string> lines = {"aa x", "bb y", "cc z", "aa q"};
    std::vector<int> ids;
    for (size_t i = 0; i < lines.size(); ++i) ids.push_back(tree.parse_line(rec(i + 1, lines[i])));
    CHECK(ids[0] == 0);
    CHECK(ids[1] == 1);
    CHECK(ids[2] == 2);
    for (size_t i = 0; i < tree.vocabulary().size(); ++i)
        CHECK(tree.vocabulary()[i].template_id == static_cast<int>(i));
}

TEST_CASE("merge is sound: a template matches every line assigned to it") {
    ParseTree tree(default_config());
    std::vector<std::string> lines = {
        "Received block blk_1 of size 100 from host1",
        "Received block blk_2 of size 900 from host2",
        "Deleting block blk_3 file /data/a",
        "Deleting block blk_4 file /data/b",
    };
    std::vector<std::vector<std::string>> tokenized;
    std::vector<int> ids;
    for (size_t i = 0; i < lines.size(); ++i) {
        tokenized.push_back(tree.mask_and_tokenize(lines[i]));
        ids.push_back(tree.parse_line(rec(i + 1, lines[i])));
    }
    for (size_t i = 0; i < lines.size(); ++i) {
        const auto& tmpl = tree.vocabulary()[ids[i]].tokens;
        REQUIRE(tmpl.size() == tokenized[i].size());
        for (size_t p = 0; p < tmpl.size(); ++p)
            CHECK((tmpl[p] == kWildcard || tmpl[p] == tokenized[i][p]));
    }
}

TEST_CASE("tokens containing digits route through the wildcard branch") {
    ParseTree tree({});  // no masks: raw digit tokens hit the routing rule
    int a = tree.parse_line(rec(1, "blk123 read ok"));
    int b = tree.parse_line(rec(2, "blk456 read ok"));
    CHECK(a == b);
}

TEST_CASE("full tree level overflows into a wildcard child") {
    ParserConfig c = default_config();
    c.max_children = 2;
    ParseTree tree(c);
    // three distinct leading tokens: the third shares the overflow leaf
    tree.parse_line(rec(1, "aa tail word"));
    tree.parse_line(rec(2, "bb tail word"));
    int x = tree.parse_line(rec(3, "cc tail word"));
    int y = tree.parse_line(rec(4, "dd tail word"));
    // cc and dd both land in the wildcard leaf and are similar enough to merge
    CHECK(x == y);
}

TEST_CASE("empty message after masking is a data error") {
    ParserConfig c;
    c.variable_masks = {{R"(.*)", ""}};
    ParseTree tree(c);
    CHECK_THROWS_AS(tree.parse_line(rec(3, "anything")), DataError);
}

TEST_CASE("corpus parse skips unmatched lines and keeps line accounting") {
    std::istringstream in(
        "10 blk_1 Receiving block blk_1\n"
        "garbage\n"
        "20 blk_1 Received block blk_1\n");
    HeaderPattern h(R"((?<ts>\d+) (?<key>blk_\d+) (?<content>.*))");
    auto result = parse_corpus(in, h, default_config());
    CHECK(result.skipped == 1);
    REQUIRE(result.records.size() == 2);
    CHECK(result.per_line_assignments.size() == 3);
    CHECK(result.per_line_assignments[1] == -1);
    CHECK(result.assignments.size() == 2);
    CHECK(result.records[0].line_no == 1);
    CHECK(result.records[1].line_no == 3);
}

TEST_CASE("empty corpus parses to an empty vocabulary") {
    std::istringstream in("");
    HeaderPattern h(R"((?<content>.*))");
    auto result = parse_corpus(in, h, {});
    CHECK(result.vocabulary.empty());
    CHECK(result.records.empty());
}

TEST_CASE("repeated identical lines yield a single template") {
    std::string line = "connection established ok\n";
    std::string corpus;
    for (int i = 0; i < 50; ++i) corpus += line;
    std::istringstream in(corpus);
    HeaderPattern h(R"((?<content>.*))");
    auto result = parse_corpus(in, h, {});
    CHECK(result.vocabulary.size() == 1);
    for (int id : result.assignments) CHECK(id == 0);
}

TEST_CASE("parsing is deterministic") {
    std::string corpus =
        "open file /a/b size 10\n"
        "open file /c/d size 90\n"
        "close file /a/b\n"
        "network timeout on host 7\n";
    auto run = [&] {
        std::istringstream in(corpus);
        HeaderPattern h(R"((?<content>.*))");
        auto r = parse_corpus(in, h, default_config());
        std::ostringstream out;
        write_vocabulary(out, r.vocabulary);
        return out.str();
    };
    CHECK(run() == run());
}

TEST_CASE("vocabulary file round-trips") {
    std::vector<LogTemplate> vocab = {{0, {"send", "<*>", "packets"}},
                                      {1, {"connection", "closed"}}};
    std::ostringstream out;
    write_vocabulary(out, vocab);
    CHECK(out.str() == "0\tsend <*> packets\n1\tconnection closed\n");
    std::istringstream in(out.str());
    auto back = read_vocabulary(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].tokens == vocab[0].tokens);
    CHECK(back[1].tokens == vocab[1].tokens);
}

TEST_CASE("vocabulary files with gapped ids are rejected") {
    std::istringstream in("0\ta b\n2\tc d\n");
    CHECK_THROWS_AS(read_vocabulary(in), DataError);
}

TEST_CASE("parser config validation") {
    ParserConfig c;
    c.tree_depth = 2;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.similarity_threshold = 0.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.max_children = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
}
