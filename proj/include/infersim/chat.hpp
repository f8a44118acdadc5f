#pragma once

#include "infersim/domain.hpp"
#include "infersim/image.hpp"
#include "infersim/tokenizer.hpp"

#include <span>
#include <string>
#include <vector>

namespace infersim {

struct ChatPart {
    enum class Kind { Text, ImageUrl };
    Kind kind = Kind::Text;
    std::string value;  // text, or the image_url.url string
};

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::vector<ChatPart> parts;
};

struct BuiltPrompt {
    std::vector<TokenId> tokens;
    std::vector<MediaItem> media;  // decoded, positions set
};

// Fixed chat template: `<role>\n<content>\n` per message plus a final
// `assistant\n` generation cue. Image parts are absorbed at their position
// in the token stream. Deterministic, so shared system prompts become
// shared token prefixes.
BuiltPrompt build_prompt(std::span<const ChatMessage> messages, const ToyTokenizer& tokenizer,
                         const FetchOptions& fetch = {});

}  // namespace infersim
