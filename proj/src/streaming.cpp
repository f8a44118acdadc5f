#include "infersim/streaming.hpp"

namespace infersim {

namespace {

constexpr const char* kReplacement = "\xEF\xBF\xBD";  // U+FFFD

inline bool is_cont(unsigned char b) { return (b & 0xC0) == 0x80; }

// First-continuation lower/upper bounds per lead byte (RFC 3629 table).
inline void first_cont_range(unsigned char lead, unsigned char& lo, unsigned char& hi) {
    lo = 0x80;
    hi = 0xBF;
    if (lead == 0xE0) lo = 0xA0;
    else if (lead == 0xED) hi = 0x9F;
    else if (lead == 0xF0) lo = 0x90;
    else if (lead == 0xF4) hi = 0x8F;
}

}  // namespace

std::string StreamDecoder::drain(bool at_end) {
    std::string out;
    std::size_t i = 0;
    const std::size_t n = held_.size();
    while (i < n) {
        unsigned char lead = static_cast<unsigned char>(held_[i]);
        if (lead < 0x80) {
            out.push_back(static_cast<char>(lead));
            ++i;
            continue;
        }
        int need;
        if (lead >= 0xC2 && lead <= 0xDF) need = 1;
        else if (lead >= 0xE0 && lead <= 0xEF) need = 2;
        else if (lead >= 0xF0 && lead <= 0xF4) need = 3;
        else {
            out += kReplacement;
            ++i;
            continue;
        }
        unsigned char lo, hi;
        first_cont_range(lead, lo, hi);
        int have = 0;
        bool malformed = false;
        while (have < need && i + 1 + static_cast<std::size_t>(have) < n) {
            unsigned char b = static_cast<unsigned char>(held_[i + 1 + static_cast<std::size_t>(have)]);
            bool ok = have == 0 ? (b >= lo && b <= hi) : is_cont(b);
            if (!ok) {
                malformed = true;
                break;
            }
            ++have;
        }
        if (malformed) {
            // Maximal subpart: replace the lead plus valid continuations seen.
            out += kReplacement;
            i += 1 + static_cast<std::size_t>(have);
            continue;
        }
        if (have < need) {
            // Incomplete but still completable.
            if (at_end) {
                out += kReplacement;
                i = n;
            }
            break;
        }
        out.append(held_, i, static_cast<std::size_t>(need) + 1);
        i += static_cast<std::size_t>(need) + 1;
    }
    held_.erase(0, i);
    emitted_len_ += out.size();
    return out;
}

std::string StreamDecoder::push_token(TokenId t) {
    held_ += tokenizer_->token_bytes(t);
    return drain(false);
}

std::string StreamDecoder::finish() {
    return drain(true);
}

}  // namespace infersim
