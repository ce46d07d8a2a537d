#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "ftlab/corpus.hpp"

using namespace ftlab;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() : path(fs::temp_directory_path() / ("ftlab-corpus-" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    void put(const std::string& rel, const std::string& text) const {
        fs::path p = path / rel;
        fs::create_directories(p.parent_path());
        write_text_file(p.string(), text);
    }
};

std::vector<Article> make_articles(const std::vector<std::string>& texts) {
    std::vector<Article> out;
    for (std::size_t i = 0; i < texts.size(); ++i)
        out.push_back({"a" + std::to_string(i) + ".txt", texts[i], std::nullopt});
    return out;
}

}  // namespace

TEST_CASE("recursive load, lexicographic order, duplicate texts dropped") {
    TmpDir tmp;
    tmp.put("b.txt", "beta");
    tmp.put("a.txt", "alpha");
    tmp.put("sub/c.txt", "gamma");
    tmp.put("sub/dup.txt", "alpha");  // exact duplicate of a.txt
    tmp.put("notes.md", "ignored");   // not .txt
    CorpusLoadReport report;
    auto articles = load_corpus(tmp.path.string(), &report);
    REQUIRE(articles.size() == 3);
    CHECK(articles[0].source_id == "a.txt");
    CHECK(articles[1].source_id == "b.txt");
    CHECK(articles[2].source_id == "sub/c.txt");
    CHECK(report.duplicates_dropped == 1);
}

TEST_CASE("manifest sidecar provides dates") {
    TmpDir tmp;
    tmp.put("x.txt", "one");
    tmp.put("y.txt", "two");
    tmp.put("manifest.csv", "path,date\nx.txt,2023-05-01\n");
    auto articles = load_corpus(tmp.path.string());
    REQUIRE(articles.size() == 2);
    REQUIRE(articles[0].date.has_value());
    CHECK(articles[0].date->to_iso() == "2023-05-01");
    CHECK_FALSE(articles[1].date.has_value());
}

TEST_CASE("empty corpus is an error") {
    TmpDir tmp;
    CHECK_THROWS_AS(load_corpus(tmp.path.string()), Error);
    CHECK_THROWS_AS(load_corpus((tmp.path / "nope").string()), IoError);
}

TEST_CASE("chunk stream puts one eos after each article") {
    ByteTokenizer tok;
    auto chunks = build_chunks(make_articles({"ab", "cd"}), tok, 3);
    REQUIRE(chunks.size() == 2);
    std::vector<int> want0{'a' + 3, 'b' + 3, ByteTokenizer::kEos};
    std::vector<int> want1{'c' + 3, 'd' + 3, ByteTokenizer::kEos};
    CHECK(chunks[0].ids == want0);
    CHECK(chunks[1].ids == want1);
    CHECK(chunks[0].provenance == std::vector<std::string>{"a0.txt"});
}

TEST_CASE("partial tail chunk is dropped and count obeys the floor law") {
    ByteTokenizer tok;
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> len(0, 40);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + trial % 7;
        std::vector<std::string> texts;
        std::size_t total = 0;
        for (int i = 0; i < n; ++i) {
            texts.push_back(std::string(len(rng), 'x'));
            total += texts.back().size() + 1;  // +1 for eos
        }
        int chunk_len = 2 + trial % 12;
        if (total < static_cast<std::size_t>(chunk_len)) {
            CHECK_THROWS_AS(build_chunks(make_articles(texts), tok, chunk_len), ContractError);
            continue;
        }
        auto chunks = build_chunks(make_articles(texts), tok, chunk_len);
        CHECK(chunks.size() == total / chunk_len);
        // concatenation reproduces the stream prefix
        std::vector<int> stream;
        for (const auto& t : texts) {
            auto ids = tok.encode(t);
            stream.insert(stream.end(), ids.begin(), ids.end());
            stream.push_back(ByteTokenizer::kEos);
        }
        std::size_t pos = 0;
        for (const auto& c : chunks)
            for (int id : c.ids) CHECK(id == stream[pos++]);
    }
}

TEST_CASE("fraction split is deterministic with exact counts") {
    auto articles = make_articles({"q", "w", "e", "r", "t", "y", "u", "i"});
    SplitResult s1 = split_corpus(articles, 0.25);
    SplitResult s2 = split_corpus(articles, 0.25);
    CHECK(s1.test.size() == 2);
    CHECK(s1.train.size() == 6);
    REQUIRE(s1.test.size() == s2.test.size());
    for (std::size_t i = 0; i < s1.test.size(); ++i)
        CHECK(s1.test[i].source_id == s2.test[i].source_id);
    // shuffling the input does not change membership
    auto shuffled = articles;
    std::reverse(shuffled.begin(), shuffled.end());
    SplitResult s3 = split_corpus(shuffled, 0.25);
    std::set<std::string> a, b;
    for (const auto& art : s1.test) a.insert(art.source_id);
    for (const auto& art : s3.test) b.insert(art.source_id);
    CHECK(a == b);

    CHECK_THROWS_AS(split_corpus(articles, -0.1), ContractError);
    CHECK_THROWS_AS(split_corpus(articles, 1.1), ContractError);
}

TEST_CASE("date split") {
    std::vector<Article> articles{
        {"old.txt", "o", Date::from_iso("2022-01-05")},
        {"mid.txt", "m", Date::from_iso("2023-06-01")},
        {"new.txt", "n", Date::from_iso("2024-02-02")},
    };
    SplitResult s = split_corpus(articles, Date::from_iso("2023-06-01"));
    REQUIRE(s.train.size() == 1);
    REQUIRE(s.test.size() == 2);
    CHECK(s.train[0].source_id == "old.txt");

    articles.push_back({"undated.txt", "u", std::nullopt});
    try {
        split_corpus(articles, Date::from_iso("2023-06-01"));
        FAIL("expected error for undated article");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("undated.txt") != std::string::npos);
    }
    articles.pop_back();
    CHECK_THROWS_AS(split_corpus(articles, Date::from_iso("2020-01-01")), Error);
}
