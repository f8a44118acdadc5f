#include "infersim/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <fstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace infersim {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FetchError("cannot open file: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> fetch_url(const std::string& url, const FetchOptions& opts) {
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end + 3);
    std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::duration<double>(opts.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(opts.timeout_s));
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res) throw FetchError("fetch failed for " + url + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw FetchError("fetch failed for " + url + ": HTTP " + std::to_string(res->status));
    return {res->body.begin(), res->body.end()};
}

}  // namespace

CanonicalImage decode_image_bytes(std::span<const std::uint8_t> bytes) {
    cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat img = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
    if (img.empty()) throw DecodeError("image decode failed");
    if (img.depth() != CV_8U) throw UnsupportedFormat("only 8-bit images are supported");

    CanonicalImage out;
    out.width = static_cast<std::uint32_t>(img.cols);
    out.height = static_cast<std::uint32_t>(img.rows);
    out.pixels.resize(static_cast<std::size_t>(3) * out.width * out.height);

    const int ch = img.channels();
    std::size_t o = 0;
    for (int y = 0; y < img.rows; ++y) {
        const std::uint8_t* row = img.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.cols; ++x) {
            const std::uint8_t* px = row + static_cast<std::size_t>(x) * ch;
            std::uint8_t r, g, b, a = 255;
            if (ch == 1) {
                r = g = b = px[0];
            } else if (ch == 3) {  // OpenCV decodes to BGR
                b = px[0], g = px[1], r = px[2];
            } else if (ch == 4) {
                b = px[0], g = px[1], r = px[2], a = px[3];
            } else {
                throw UnsupportedFormat("unsupported channel count");
            }
            // composite over black
            out.pixels[o++] = static_cast<std::uint8_t>(r * a / 255);
            out.pixels[o++] = static_cast<std::uint8_t>(g * a / 255);
            out.pixels[o++] = static_cast<std::uint8_t>(b * a / 255);
        }
    }
    return out;
}

CanonicalImage canonical_decode(const std::string& source, const FetchOptions& opts) {
    if (source.rfind("data:", 0) == 0) {
        auto comma = source.find(',');
        if (comma == std::string::npos || source.find(";base64", 0) == std::string::npos)
            throw UnsupportedFormat("only base64 data URIs are supported");
        return decode_image_bytes(base64_decode(std::string_view(source).substr(comma + 1)));
    }
    if (source.rfind("http://", 0) == 0 || source.rfind("https://", 0) == 0) {
        return decode_image_bytes(fetch_url(source, opts));
    }
    if (!opts.allow_local_files) throw FetchError("local file access is disabled");
    std::string path = source;
    if (source.rfind("file://", 0) == 0) path = source.substr(7);
    return decode_image_bytes(read_file(path));
}

namespace {
constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
        int v = b64_value(c);
        if (v < 0) throw DecodeError("invalid base64 character");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        std::uint32_t v = bytes[i] << 16;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == bytes.size()) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out += "=";
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const CanonicalImage& img) {
    cv::Mat rgb(static_cast<int>(img.height), static_cast<int>(img.width), CV_8UC3,
                const_cast<std::uint8_t*>(img.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", bgr, out)) throw DecodeError("png encode failed");
    return out;
}

}  // namespace infersim
