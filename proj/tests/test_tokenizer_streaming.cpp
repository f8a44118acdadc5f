#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "infersim/streaming.hpp"
#include "infersim/tokenizer.hpp"

#include <random>
#include <string>
#include <vector>

using namespace infersim;

namespace {

// Independent validity check (RFC 3629 table), deliberately not sharing
// code with StreamDecoder.
bool is_valid_utf8(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t len;
        unsigned lo = 0x80, hi = 0xbf;
        if (c <= 0x7f) {
            i += 1;
            continue;
        } else if (c >= 0xc2 && c <= 0xdf) {
            len = 2;
        } else if (c == 0xe0) {
            len = 3;
            lo = 0xa0;
        } else if (c >= 0xe1 && c <= 0xec) {
            len = 3;
        } else if (c == 0xed) {
            len = 3;
            hi = 0x9f;
        } else if (c >= 0xee && c <= 0xef) {
            len = 3;
        } else if (c == 0xf0) {
            len = 4;
            lo = 0x90;
        } else if (c >= 0xf1 && c <= 0xf3) {
            len = 4;
        } else if (c == 0xf4) {
            len = 4;
            hi = 0x8f;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
        if (c1 < lo || c1 > hi) return false;
        for (std::size_t k = 2; k < len; ++k) {
            unsigned char ck = static_cast<unsigned char>(s[i + k]);
            if (ck < 0x80 || ck > 0xbf) return false;
        }
        i += len;
    }
    return true;
}

std::string encode_cp(char32_t cp) {
    std::string out;
    if (cp <= 0x7f) {
        out += static_cast<char>(cp);
    } else if (cp <= 0x7ff) {
        out += static_cast<char>(0xc0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp <= 0xffff) {
        out += static_cast<char>(0xe0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
        out += static_cast<char>(0xf0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    }
    return out;
}

std::string random_utf8(std::mt19937_64& rng, std::size_t max_cps) {
    std::string out;
    const std::size_t n = rng() % max_cps + 1;
    for (std::size_t i = 0; i < n; ++i) {
        char32_t cp;
        do {
            switch (rng() % 4) {
                case 0: cp = static_cast<char32_t>(rng() % 0x80); break;
                case 1: cp = static_cast<char32_t>(0x80 + rng() % 0x780); break;
                case 2: cp = static_cast<char32_t>(0x800 + rng() % 0xf800); break;
                default: cp = static_cast<char32_t>(0x10000 + rng() % 0x100000); break;
            }
        } while (cp >= 0xd800 && cp <= 0xdfff);
        out += encode_cp(cp);
    }
    return out;
}

}  // namespace

TEST_CASE("byte tokens round-trip exactly") {
    ToyTokenizer tok;
    const std::string text = "héllo wörld\xF0\x9F\x98\x80 \t\n\x01";
    auto ids = tok.encode(text);
    CHECK(ids.size() == text.size());
    CHECK(tok.decode(ids) == text);
}

TEST_CASE("high token ids decode to the code point's utf-8") {
    ToyTokenizer tok;
    CHECK(tok.token_bytes(0x41) == "A");
    CHECK(tok.token_bytes(0x20ac) == "\xE2\x82\xAC");  // EURO SIGN
    CHECK(tok.token_bytes(256) == "\xC4\x80");          // U+0100
    CHECK(tok.token_bytes(49999) == encode_cp(49999));
}

TEST_CASE("stream decoder holds split multibyte sequences") {
    ToyTokenizer tok;
    StreamDecoder dec(tok);
    // EURO SIGN split across byte tokens: E2 82 | AC
    CHECK(dec.push_token(0xE2).empty());
    CHECK(dec.push_token(0x82).empty());
    CHECK(dec.held_bytes().size() == 2);
    CHECK(dec.push_token(0xAC) == "\xE2\x82\xAC");
    CHECK(dec.finish().empty());
}

TEST_CASE("stream decoder flushes dangling bytes as U+FFFD") {
    ToyTokenizer tok;
    StreamDecoder dec(tok);
    CHECK(dec.push_token(0xE2).empty());
    CHECK(dec.finish() == "\xEF\xBF\xBD");
}

TEST_CASE("invalid continuation is replaced, following ascii kept") {
    ToyTokenizer tok;
    StreamDecoder dec(tok);
    CHECK(dec.push_token(0xE2).empty());
    std::string out = dec.push_token('x');
    out += dec.finish();
    CHECK(out == "\xEF\xBF\xBDx");
    CHECK(is_valid_utf8(out));
}

TEST_CASE("fuzz: every chunk valid, concatenation exact") {
    ToyTokenizer tok;
    std::mt19937_64 rng(0xf00d);
    for (int iter = 0; iter < 100000; ++iter) {
        const std::string text = random_utf8(rng, 12);
        auto ids = tok.encode(text);
        StreamDecoder dec(tok);
        std::string joined;
        for (TokenId t : ids) {
            std::string chunk = dec.push_token(t);
            REQUIRE(is_valid_utf8(chunk));
            joined += chunk;
        }
        std::string tail = dec.finish();
        REQUIRE(is_valid_utf8(tail));
        joined += tail;
        REQUIRE(joined == text);
    }
}

TEST_CASE("fuzz: model token streams always emit valid utf-8") {
    ToyTokenizer tok;
    std::mt19937_64 rng(0xbeef);
    for (int iter = 0; iter < 2000; ++iter) {
        StreamDecoder dec(tok);
        std::string joined;
        const std::size_t n = rng() % 40 + 1;
        for (std::size_t i = 0; i < n; ++i) {
            std::string chunk = dec.push_token(static_cast<TokenId>(rng() % 50000));
            REQUIRE(is_valid_utf8(chunk));
            joined += chunk;
        }
        joined += dec.finish();
        REQUIRE(is_valid_utf8(joined));
    }
}
