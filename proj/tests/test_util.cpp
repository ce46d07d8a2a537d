#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ftlab/util.hpp"

using namespace ftlab;

TEST_CASE("date iso round trip and arithmetic") {
    Date d = Date::from_iso("2024-02-29");
    CHECK(d.to_iso() == "2024-02-29");
    CHECK((d + 1).to_iso() == "2024-03-01");
    CHECK(Date::from_iso("1970-01-01").days == 0);
    CHECK(Date::from_iso("1969-12-31").days == -1);
    CHECK(Date::from_iso("2024-02-02") - Date::from_iso("2024-02-01") == 1);
    CHECK(Date::from_iso("2000-03-01") - Date::from_iso("2000-02-28") == 2);  // leap year

    CHECK_FALSE(Date::try_from_iso("2024-13-01").has_value());
    CHECK_FALSE(Date::try_from_iso("2023-02-29").has_value());
    CHECK_FALSE(Date::try_from_iso("20240101").has_value());
    CHECK_THROWS_AS(Date::from_iso("nonsense"), ParseError);
}

TEST_CASE("csv parsing handles quoting") {
    auto rows = parse_csv("a,b,c\n\"x,y\",\"he said \"\"hi\"\"\",plain\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][0] == "x,y");
    CHECK(rows[1][1] == "he said \"hi\"");
    CHECK(rows[1][2] == "plain");

    auto multiline = parse_csv("h\n\"two\nlines\"\n");
    REQUIRE(multiline.size() == 2);
    CHECK(multiline[1][0] == "two\nlines");

    auto crlf = parse_csv("a,b\r\n1,2\r\n");
    REQUIRE(crlf.size() == 2);
    CHECK(crlf[1][1] == "2");
}

TEST_CASE("csv escape round trips through parse") {
    for (const std::string& field : {std::string("plain"), std::string("with,comma"),
                                     std::string("with \"quotes\""), std::string("multi\nline")}) {
        auto rows = parse_csv(csv_escape(field) + "\n");
        REQUIRE(rows.size() == 1);
        CHECK(rows[0][0] == field);
    }
    // a lone empty field is only recoverable next to a delimiter
    auto rows = parse_csv("a," + csv_escape("") + "\n");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == std::vector<std::string>{"a", ""});
}

TEST_CASE("string helpers") {
    CHECK(lowercase_ascii("MiXeD 123") == "mixed 123");
    CHECK(trim("  padded \t\n") == "padded");
    CHECK(trim("") == "");
    // FNV-1a reference vectors
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("file io errors") {
    CHECK_THROWS_AS(read_text_file("/nonexistent/nope.txt"), IoError);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/nope.txt", "x"), IoError);
}
