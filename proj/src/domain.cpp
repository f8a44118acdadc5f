#include "infersim/domain.hpp"

#include "infersim/errors.hpp"

namespace infersim {

ContentDigest content_hash(const CanonicalImage& img) {
    Sha256 h;
    h.update_u64_be(img.width);
    h.update_u64_be(img.height);
    h.update(img.pixels.data(), img.pixels.size());
    return h.digest();
}

ContentDigest token_prefix_hash(std::span<const TokenId> tokens) {
    if (tokens.empty()) throw EmptySequence("token_prefix_hash: empty token sequence");
    Sha256 h;
    for (TokenId t : tokens) h.update_u32_be(t);
    return h.digest();
}

}  // namespace infersim
