#pragma once

#include "infersim/tokenizer.hpp"

#include <string>

namespace infersim {

// Incremental detokenizer: turns per-step token emissions into chunks that
// are each individually valid UTF-8. Bytes that could still grow into a
// complete multi-byte sequence are withheld; malformed sequences are
// replaced with U+FFFD.
class StreamDecoder {
public:
    explicit StreamDecoder(const ToyTokenizer& tokenizer) : tokenizer_(&tokenizer) {}

    // Appends the token's bytes and releases the longest valid prefix.
    std::string push_token(TokenId t);

    // Flushes held bytes, lossy-replacing any dangling partial sequence.
    std::string finish();

    const std::string& held_bytes() const { return held_; }
    std::size_t emitted_len() const { return emitted_len_; }

private:
    std::string drain(bool at_end);

    const ToyTokenizer* tokenizer_;
    std::string held_;
    std::size_t emitted_len_ = 0;
};

}  // namespace infersim
