#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ftlab/instructions.hpp"
#include "ftlab/util.hpp"

using namespace ftlab;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("ftlab-instr-" + std::to_string(::getpid()) + name))
        .string();
}

std::vector<InstructionItem> fixture_items(int n) {
    std::vector<InstructionItem> items;
    InstructionCategory cats[] = {InstructionCategory::kPhilosophy,
                                  InstructionCategory::kMethodology, InstructionCategory::kFacts};
    for (int i = 0; i < n; ++i) {
        InstructionItem item;
        item.category = cats[i % 3];
        item.question = "Question number " + std::to_string(i) + "?";
        item.answer = "Answer number " + std::to_string(i) + ".";
        if (i % 7 == 3) item.system = "special prompt " + std::to_string(i);
        items.push_back(item);
    }
    return items;
}

}  // namespace

TEST_CASE("build then validate round trips thirty items") {
    std::string path = tmp_path("30.jsonl");
    auto items = fixture_items(30);
    BuildSummary summary = build_jsonl(items, kDefaultSystemPrompt, path);
    CHECK(summary.total == 30);
    CHECK_FALSE(summary.under_minimum);
    CHECK(summary.per_category.at("philosophy") == 10);
    CHECK(summary.per_category.at("methodology") == 10);
    CHECK(summary.per_category.at("facts") == 10);

    ValidationReport report = validate_jsonl(path);
    CHECK(report.ok());
    CHECK(report.line_count == 30);

    // no trailing blank line, LF endings only
    std::string bytes = read_text_file(path);
    CHECK(bytes.back() == '\n');
    CHECK(bytes.find("\r") == std::string::npos);
    CHECK(bytes.substr(bytes.size() - 2) != "\n\n");

    // first line carries the default prompt
    std::istringstream in(bytes);
    std::string line;
    std::getline(in, line);
    json first = json::parse(line);
    CHECK(first["messages"][0]["content"] == kDefaultSystemPrompt);
    CHECK(first["messages"][1]["role"] == "user");
    CHECK(first["messages"][2]["role"] == "assistant");
    fs::remove(path);
}

TEST_CASE("under minimum count warns but succeeds") {
    std::string path = tmp_path("5.jsonl");
    BuildSummary summary = build_jsonl(fixture_items(5), kDefaultSystemPrompt, path);
    fs::remove(path);
    CHECK(summary.total == 5);
    CHECK(summary.under_minimum);
}

TEST_CASE("empty fields name the offending item") {
    auto items = fixture_items(3);
    items[1].answer = "   ";
    try {
        build_jsonl(items, kDefaultSystemPrompt, tmp_path("bad.jsonl"));
        FAIL("expected ContractError");
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()).find("item 2") != std::string::npos);
    }
    CHECK_THROWS_AS(build_jsonl({}, kDefaultSystemPrompt, tmp_path("none.jsonl")),
                    ContractError);
}

TEST_CASE("seeded violations are caught with line numbers") {
    std::string path = tmp_path("viol.jsonl");
    std::string good =
        R"({"messages":[{"role":"system","content":"s"},{"role":"user","content":"q"},{"role":"assistant","content":"a"}]})";
    std::string wrong_order =
        R"({"messages":[{"role":"user","content":"q"},{"role":"system","content":"s"},{"role":"assistant","content":"a"}]})";
    std::string empty_content =
        R"({"messages":[{"role":"system","content":"s"},{"role":"user","content":""},{"role":"assistant","content":"a"}]})";
    std::string not_json = "{oops";
    write_text_file(path, good + "\n" + wrong_order + "\n" + "\n" + empty_content + "\n" +
                              not_json + "\n" + good + "\n");
    ValidationReport report = validate_jsonl(path);
    fs::remove(path);
    CHECK(report.line_count == 6);
    REQUIRE(report.violations.size() == 4);
    CHECK(report.violations[0].line == 2);  // role order
    CHECK(report.violations[1].line == 3);  // blank line
    CHECK(report.violations[2].line == 4);  // empty content
    CHECK(report.violations[3].line == 5);  // malformed JSON
    CHECK_FALSE(report.ok());
}

TEST_CASE("csv and jsonl inputs read identically") {
    std::string csv = tmp_path("in.csv");
    write_text_file(csv,
                    "category,question,answer,system\n"
                    "philosophy,\"Why, though?\",Because.,\n"
                    "facts,What is two?,Two is 2.,custom prompt\n");
    auto from_csv = read_instruction_items(csv);
    fs::remove(csv);
    REQUIRE(from_csv.size() == 2);
    CHECK(from_csv[0].category == InstructionCategory::kPhilosophy);
    CHECK(from_csv[0].question == "Why, though?");
    CHECK_FALSE(from_csv[0].system.has_value());
    REQUIRE(from_csv[1].system.has_value());
    CHECK(*from_csv[1].system == "custom prompt");

    std::string jsonl = tmp_path("in.jsonl");
    write_text_file(jsonl,
                    R"({"category":"philosophy","question":"Why, though?","answer":"Because."})"
                    "\n"
                    R"({"category":"facts","question":"What is two?","answer":"Two is 2.","system":"custom prompt"})"
                    "\n");
    auto from_jsonl = read_instruction_items(jsonl);
    fs::remove(jsonl);
    REQUIRE(from_jsonl.size() == 2);
    CHECK(from_jsonl[0].question == from_csv[0].question);
    CHECK(from_jsonl[1].system == from_csv[1].system);

    CHECK_THROWS_AS(instruction_category_from_name("poetry"), ParseError);
}
