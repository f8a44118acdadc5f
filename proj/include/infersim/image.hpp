#pragma once

#include "infersim/domain.hpp"
#include "infersim/errors.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace infersim {

struct FetchOptions {
    double timeout_s = 10.0;
    bool allow_local_files = true;
};

// PNG/JPEG bytes -> RGB8 raster. Alpha composites over black so RGBA and
// RGB deliveries of the same pixels hash identically.
CanonicalImage decode_image_bytes(std::span<const std::uint8_t> bytes);

// Dispatches on the source form: `data:image/...;base64,` URI, http(s)
// URL, `file://` URL, or plain filesystem path.
CanonicalImage canonical_decode(const std::string& source, const FetchOptions& opts = {});

std::vector<std::uint8_t> base64_decode(std::string_view text);
std::string base64_encode(std::span<const std::uint8_t> bytes);

// PNG container for a raster (test/bench helper; lossless).
std::vector<std::uint8_t> encode_png(const CanonicalImage& img);

}  // namespace infersim
