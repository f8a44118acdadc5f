#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "infersim/digest.hpp"
#include "infersim/domain.hpp"
#include "infersim/errors.hpp"
#include "infersim/media_cache.hpp"

#include <numeric>
#include <vector>

using namespace infersim;

// Golden digests below were computed independently with Python's hashlib
// over the documented byte layouts.

TEST_CASE("sha256 incremental matches one-shot") {
    const char* msg = "the quick brown fox";
    Sha256 inc;
    inc.update(msg, 9);
    inc.update(msg + 9, 10);
    CHECK(inc.digest() == sha256(msg, 19));

    // snapshot semantics: digest() doesn't consume the state
    Sha256 a;
    a.update("ab", 2);
    ContentDigest first = a.digest();
    CHECK(first == a.digest());
    a.update("c", 1);
    CHECK(a.digest() == sha256("abc", 3));

    Sha256 copied = a;
    copied.update("d", 1);
    CHECK(a.digest() == sha256("abc", 3));
    CHECK(copied.digest() == sha256("abcd", 4));
}

TEST_CASE("token_prefix_hash golden values") {
    std::vector<TokenId> one{7};
    CHECK(token_prefix_hash(one).hex() ==
          "1561ade0621c5acf44b780521f95a1e0b19b4e5032945b860c4032fc28a3a23b");
    std::vector<TokenId> three{1, 2, 3};
    CHECK(token_prefix_hash(three).hex() ==
          "7b0b5ea3ff36958c8e32ccf24b71da9ac68e51d0881bf75e62b837ec9ea6f3a5");
    CHECK_THROWS_AS(token_prefix_hash({}), EmptySequence);
}

TEST_CASE("content_hash golden values") {
    CanonicalImage black;
    black.width = 1;
    black.height = 1;
    black.pixels = {0, 0, 0};
    CHECK(content_hash(black).hex() ==
          "ddf33e0e24e16284b6eb0bc2e858cf1a177c3328890bc23b41c23c0e2cfb33e2");

    CanonicalImage ramp;
    ramp.width = 2;
    ramp.height = 2;
    ramp.pixels.resize(12);
    std::iota(ramp.pixels.begin(), ramp.pixels.end(), std::uint8_t{0});
    CHECK(content_hash(ramp).hex() ==
          "b8e335cdcda916131ef9f8360047ef1320b51bd0a80c9c0f5e5b035a72b2d5d0");

    // dimensions are part of the identity, not just the pixel bytes
    CanonicalImage wide = ramp;
    wide.width = 4;
    wide.height = 1;
    CHECK(content_hash(wide) != content_hash(ramp));
}

TEST_CASE("multimodal kv key golden value") {
    CanonicalImage black;
    black.width = 1;
    black.height = 1;
    black.pixels = {0, 0, 0};
    std::vector<ContentDigest> imgs{content_hash(black)};
    std::vector<TokenId> prompt{1, 2, 3, 4};
    CHECK(multimodal_kv_key(imgs, prompt, 2).hex() ==
          "c03741d9fcad84d7fc0dcbda62fb431fca8fc8fa1aa01735f61674ca394fed6f");
    // key depends on the covered prompt span
    CHECK(multimodal_kv_key(imgs, prompt, 3) != multimodal_kv_key(imgs, prompt, 2));
}

TEST_CASE("fnv1a standard vectors") {
    CHECK(fnv1a("", 0) == kFnvOffsetBasis);
    CHECK(fnv1a("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("kv state replay is order sensitive and deterministic") {
    KVState a, b;
    a.absorb_token(1);
    a.absorb_token(2);
    b.absorb_token(2);
    b.absorb_token(1);
    CHECK(a.state_digest != b.state_digest);
    CHECK(a.token_count == 2);

    KVState c;
    c.absorb_token(1);
    c.absorb_token(2);
    CHECK(a == c);
    c.absorb_token(3);
    CHECK(c.state_digest == 0xa79f98278dd69ed5ULL);  // Python oracle
}

TEST_CASE("kv state absorbs embeddings by patch count") {
    KVState kv;
    kv.bytes_per_token = 100;
    VisionEmbedding emb;
    emb.patch_count = 64;
    emb.values_digest = 0x1122334455667788ULL;
    kv.absorb_embedding(emb);
    CHECK(kv.token_count == 64);
    CHECK(kv.byte_size() == 6400);
    CHECK(kv.state_digest == 0xe61eba5b46fc24ddULL);
}

TEST_CASE("canonical image validity") {
    CanonicalImage img;
    CHECK_FALSE(img.valid());
    img.width = 2;
    img.height = 3;
    img.pixels.resize(18);
    CHECK(img.valid());
    img.pixels.resize(17);
    CHECK_FALSE(img.valid());
}
