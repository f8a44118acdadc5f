#pragma once

#include "infersim/domain.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace infersim {

// Byte-level toy tokenizer. Ids 0..255 are raw bytes, so any UTF-8 string
// round-trips exactly and multi-byte code points become multi-token
// sequences. Ids >= 256 (only ever produced by the simulated model) decode
// to the UTF-8 encoding of the code point equal to the id.
class ToyTokenizer {
public:
    explicit ToyTokenizer(std::uint32_t vocab_size = 50000) : vocab_size_(vocab_size) {}

    std::uint32_t vocab_size() const { return vocab_size_; }

    std::vector<TokenId> encode(std::string_view text) const {
        std::vector<TokenId> out;
        out.reserve(text.size());
        for (unsigned char c : text) out.push_back(static_cast<TokenId>(c));
        return out;
    }

    // Raw bytes for one token; may be a partial UTF-8 sequence for byte ids.
    std::string token_bytes(TokenId t) const;

    std::string decode(std::span<const TokenId> tokens) const {
        std::string out;
        for (TokenId t : tokens) out += token_bytes(t);
        return out;
    }

private:
    std::uint32_t vocab_size_;
};

}  // namespace infersim
