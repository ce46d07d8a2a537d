#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ftlab/tokenizer.hpp"

using namespace ftlab;

namespace {

// Encode a code point as UTF-8 by hand, the test-side oracle.
std::string utf8_of(uint32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

}  // namespace

TEST_CASE("vocab layout") {
    ByteTokenizer tok;
    CHECK(tok.vocab_size() == 259);
    CHECK(ByteTokenizer::kPad == 0);
    CHECK(ByteTokenizer::kBos == 1);
    CHECK(ByteTokenizer::kEos == 2);
    auto ids = tok.encode("A");
    REQUIRE(ids.size() == 1);
    CHECK(ids[0] == 0x41 + ByteTokenizer::kReserved);
}

TEST_CASE("round trip, one token per byte") {
    ByteTokenizer tok;
    for (const std::string& s :
         {std::string("hello world"), std::string("caf\xc3\xa9"), std::string("\xe6\x97\xa5\xe6\x9c\xac"),
          std::string("\xf0\x9f\x98\x80 ok"), std::string("")}) {
        auto ids = tok.encode(s);
        CHECK(ids.size() == s.size());
        CHECK(tok.decode(ids) == s);
    }
}

TEST_CASE("random unicode round trips") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<uint32_t> pick(0, 0x10FFFF);
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        for (int i = 0; i < 20; ++i) {
            uint32_t cp = pick(rng);
            if (cp >= 0xD800 && cp <= 0xDFFF) cp = 0x20;  // no surrogates in UTF-8
            s += utf8_of(cp);
        }
        ByteTokenizer tok;
        auto ids = tok.encode(s);
        CHECK(ids.size() == s.size());
        CHECK(tok.decode(ids) == s);
    }
}

TEST_CASE("reserved ids decode to nothing") {
    ByteTokenizer tok;
    CHECK(tok.decode({ByteTokenizer::kBos, 'h' + 3, 'i' + 3, ByteTokenizer::kEos}) == "hi");
    CHECK_THROWS_AS(tok.decode({259}), IndexError);
    CHECK_THROWS_AS(tok.decode({-1}), IndexError);
}

TEST_CASE("malformed UTF-8 is rejected with the byte offset") {
    ByteTokenizer tok;
    CHECK_THROWS_AS(tok.encode("ok\xff"), ParseError);
    try {
        tok.encode("ab\x80");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("utf8_invalid_offset catches each malformation class") {
    CHECK(utf8_invalid_offset("plain ascii") == 11);
    CHECK(utf8_invalid_offset("\x80") == 0);              // bare continuation
    CHECK(utf8_invalid_offset("\xc3") == 0);              // truncated sequence
    CHECK(utf8_invalid_offset("a\xc0\xaf") == 1);         // overlong '/'
    CHECK(utf8_invalid_offset("\xe0\x80\x80") == 0);      // overlong 3-byte
    CHECK(utf8_invalid_offset("\xed\xa0\x80") == 0);      // surrogate D800
    CHECK(utf8_invalid_offset("\xf4\x90\x80\x80") == 0);  // above U+10FFFF
    CHECK(utf8_invalid_offset("\xf0\x9f\x98\x80") == 4);  // valid astral
}
