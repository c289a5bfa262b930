#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/image.hpp"

// 8-bit image file I/O: PNG (gray / RGB, non-interlaced) and binary PPM/PGM.
// Decoding maps a sample s to s/255 exactly; encoding rounds half away from
// zero. zlib supplies deflate and crc32 for the PNG container.

namespace aqua {

inline std::uint8_t encode_sample(double v) {
    return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
}

inline double decode_sample(std::uint8_t s) { return static_cast<double>(s) / 255.0; }

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::vector<std::uint8_t>& payload) {
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    put_be32(out, crc);
}

inline int paeth_predict(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

inline std::vector<std::uint8_t> quantize_samples(const ImageBuffer& img) {
    std::vector<std::uint8_t> bytes(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) bytes[i] = encode_sample(img.data[i]);
    return bytes;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    require(img.channels == 1 || img.channels == 3, ErrorCategory::dimension,
            "png encoder supports 1 or 3 channels");
    const std::uint8_t color_type = img.channels == 1 ? 0 : 2;
    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;

    const auto samples = detail::quantize_samples(img);
    std::vector<std::uint8_t> raw;
    raw.reserve((row_bytes + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), samples.begin() + static_cast<std::ptrdiff_t>(y * row_bytes),
                   samples.begin() + static_cast<std::ptrdiff_t>((y + 1) * row_bytes));
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    int rc = compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6);
    require(rc == Z_OK, ErrorCategory::io, "zlib compression failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out;
    static const std::uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.insert(out.end(), signature, signature + 8);

    std::vector<std::uint8_t> ihdr;
    detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
    detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);           // bit depth
    ihdr.push_back(color_type);  // 0 = gray, 2 = rgb
    ihdr.push_back(0);           // compression
    ihdr.push_back(0);           // filter
    ihdr.push_back(0);           // interlace
    detail::append_chunk(out, "IHDR", ihdr);
    detail::append_chunk(out, "IDAT", compressed);
    detail::append_chunk(out, "IEND", {});
    return out;
}

inline ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    require(bytes.size() > 8 && std::memcmp(bytes.data(), signature, 8) == 0, ErrorCategory::parse,
            "not a png file");

    std::size_t pos = 8;
    int width = 0, height = 0, channels = 0;
    bool saw_ihdr = false;
    std::vector<std::uint8_t> idat;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = detail::read_be32(&bytes[pos]);
        require(pos + 12 + len <= bytes.size(), ErrorCategory::parse, "truncated png chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* payload = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            require(len == 13, ErrorCategory::parse, "bad IHDR length");
            width = static_cast<int>(detail::read_be32(payload));
            height = static_cast<int>(detail::read_be32(payload + 4));
            const int depth = payload[8], color = payload[9], interlace = payload[12];
            require(depth == 8, ErrorCategory::parse, "png bit depth must be 8");
            require(color == 0 || color == 2, ErrorCategory::parse,
                    "png color type must be grayscale or rgb");
            require(interlace == 0, ErrorCategory::parse, "interlaced png not supported");
            channels = color == 0 ? 1 : 3;
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    require(saw_ihdr && !idat.empty(), ErrorCategory::parse, "png missing IHDR or IDAT");
    require(width > 0 && height > 0, ErrorCategory::parse, "bad png dimensions");

    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels;
    std::vector<std::uint8_t> raw((row_bytes + 1) * height);
    uLongf raw_size = static_cast<uLongf>(raw.size());
    int rc = uncompress(raw.data(), &raw_size, idat.data(), static_cast<uLong>(idat.size()));
    require(rc == Z_OK && raw_size == raw.size(), ErrorCategory::parse, "png inflate failed");

    // Undo per-row filtering.
    const int bpp = channels;
    std::vector<std::uint8_t> samples(row_bytes * height);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[y * (row_bytes + 1)];
        const std::uint8_t* src = &raw[y * (row_bytes + 1) + 1];
        std::uint8_t* cur = &samples[y * row_bytes];
        const std::uint8_t* up = y > 0 ? &samples[(y - 1) * row_bytes] : nullptr;
        for (std::size_t i = 0; i < row_bytes; ++i) {
            const int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
            const int above = up ? up[i] : 0;
            const int upleft = (up && i >= static_cast<std::size_t>(bpp)) ? up[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += left; break;
                case 2: v += above; break;
                case 3: v += (left + above) / 2; break;
                case 4: v += detail::paeth_predict(left, above, upleft); break;
                default: raise(ErrorCategory::parse, "unknown png filter type");
            }
            cur[i] = static_cast<std::uint8_t>(v & 0xFF);
        }
    }

    ImageBuffer img = ImageBuffer::make(width, height, channels);
    for (std::size_t i = 0; i < samples.size(); ++i) img.data[i] = decode_sample(samples[i]);
    return img;
}

inline std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img) {
    const auto samples = detail::quantize_samples(img);
    std::string header = (img.channels == 3 ? std::string("P6\n") : std::string("P5\n")) +
                         std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), samples.begin(), samples.end());
    return out;
}

inline ImageBuffer decode_pnm(const std::vector<std::uint8_t>& bytes) {
    require(bytes.size() > 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'),
            ErrorCategory::parse, "not a binary pgm/ppm file");
    const int channels = bytes[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    auto next_int = [&]() -> int {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        require(pos < bytes.size() && std::isdigit(bytes[pos]), ErrorCategory::parse,
                "malformed pnm header");
        int v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
        return v;
    };
    const int width = next_int();
    const int height = next_int();
    const int maxval = next_int();
    require(maxval == 255, ErrorCategory::parse, "pnm maxval must be 255");
    require(pos < bytes.size() && std::isspace(bytes[pos]), ErrorCategory::parse,
            "malformed pnm header");
    ++pos;  // single whitespace before raster
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    require(bytes.size() - pos >= count, ErrorCategory::parse, "pnm raster truncated");
    ImageBuffer img = ImageBuffer::make(width, height, channels);
    for (std::size_t i = 0; i < count; ++i) img.data[i] = decode_sample(bytes[pos + i]);
    return img;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::io, "cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCategory::io, "cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(out.good(), ErrorCategory::io, "write failed: " + path);
}

inline ImageBuffer read_image(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    require(!bytes.empty(), ErrorCategory::parse, "empty image file: " + path);
    if (bytes[0] == 'P') return decode_pnm(bytes);
    return decode_png(bytes);
}

inline void write_image(const std::string& path, const ImageBuffer& img) {
    const bool pnm = path.ends_with(".ppm") || path.ends_with(".pgm");
    require(pnm || path.ends_with(".png"), ErrorCategory::validation,
            "unsupported image extension (use .png, .ppm, or .pgm): " + path);
    write_file_bytes(path, pnm ? encode_pnm(img) : encode_png(img));
}

}  // namespace aqua
