#include "infersim/chat.hpp"

namespace infersim {

BuiltPrompt build_prompt(std::span<const ChatMessage> messages, const ToyTokenizer& tokenizer,
                         const FetchOptions& fetch) {
    BuiltPrompt out;
    auto append_text = [&](const std::string& text) {
        auto toks = tokenizer.encode(text);
        out.tokens.insert(out.tokens.end(), toks.begin(), toks.end());
    };
    for (const ChatMessage& msg : messages) {
        append_text(msg.role + "\n");
        for (const ChatPart& part : msg.parts) {
            if (part.kind == ChatPart::Kind::Text) {
                append_text(part.value);
            } else {
                MediaItem item;
                item.kind = MediaSourceKind::Url;
                item.source = part.value;
                item.decoded = canonical_decode(part.value, fetch);
                item.position = out.tokens.size();
                out.media.push_back(std::move(item));
            }
        }
        append_text("\n");
    }
    append_text("assistant\n");
    return out;
}

}  // namespace infersim
