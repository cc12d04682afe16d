// SPDX-License-Identifier: Apache-2.0
#include "shortdf/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace shortdf {

namespace {

const std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    put_u32_be(out, static_cast<std::uint32_t>(data.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    put_u32_be(out, crc);
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
    throw std::runtime_error(path.string() + ": " + why);
}

}  // namespace

void write_png(const std::filesystem::path& path, const PngImage& img) {
    if (img.channels != 1 && img.channels != 3) fail(path, "write_png supports 1 or 3 channels");
    if (img.pixels.size() != img.width * img.height * img.channels) {
        fail(path, "pixel buffer does not match dimensions");
    }

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                   // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);           // color type
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);

    // filter byte 0 (None) per scanline
    const std::size_t stride = img.width * img.channels;
    std::vector<std::uint8_t> raw;
    raw.reserve(img.height * (stride + 1));
    for (std::size_t y = 0; y < img.height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), img.pixels.begin() + y * stride,
                   img.pixels.begin() + (y + 1) * stride);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) !=
        Z_OK) {
        fail(path, "zlib compression failed");
    }
    compressed.resize(bound);

    std::vector<std::uint8_t> out(kSignature, kSignature + 8);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(path, "cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) fail(path, "write failed");
}

PngImage read_png(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
        fail(path, "not a PNG file");
    }

    std::size_t w = 0, h = 0, file_channels = 0;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool saw_ihdr = false;

    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = read_u32_be(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) fail(path, "truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* data = bytes.data() + pos + 8;

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) fail(path, "bad IHDR");
            w = read_u32_be(data);
            h = read_u32_be(data + 4);
            const int depth = data[8], color = data[9], interlace = data[12];
            if (depth != 8) fail(path, "only 8-bit PNGs supported");
            if (interlace != 0) fail(path, "interlaced PNGs not supported");
            switch (color) {
                case 0: file_channels = 1; break;
                case 2: file_channels = 3; break;
                case 4: file_channels = 2; break;
                case 6: file_channels = 4; break;
                default: fail(path, "unsupported color type " + std::to_string(color));
            }
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || w == 0 || h == 0) fail(path, "missing image header");
    if (idat.empty()) fail(path, "missing image data");

    const std::size_t stride = w * file_channels;
    std::vector<std::uint8_t> raw(h * (stride + 1));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size()) {
        fail(path, "corrupt image data stream");
    }

    // unfilter scanlines in place into `pixels`
    std::vector<std::uint8_t> pixels(h * stride);
    const std::size_t bpp = file_channels;
    for (std::size_t y = 0; y < h; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
        std::uint8_t* dst = pixels.data() + y * stride;
        const std::uint8_t* up = y > 0 ? pixels.data() + (y - 1) * stride : nullptr;
        for (std::size_t x = 0; x < stride; ++x) {
            const int a = x >= bpp ? dst[x - bpp] : 0;
            const int b = up ? up[x] : 0;
            const int c = (up && x >= bpp) ? up[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: fail(path, "unknown filter type " + std::to_string(filter));
            }
            dst[x] = static_cast<std::uint8_t>(v & 0xff);
        }
    }

    PngImage img;
    img.width = w;
    img.height = h;
    if (file_channels == 2 || file_channels == 4) {
        // drop alpha
        img.channels = file_channels - 1;
        img.pixels.resize(w * h * img.channels);
        for (std::size_t i = 0; i < w * h; ++i) {
            for (std::size_t c = 0; c < img.channels; ++c) {
                img.pixels[i * img.channels + c] = pixels[i * file_channels + c];
            }
        }
    } else {
        img.channels = file_channels;
        img.pixels = std::move(pixels);
    }
    return img;
}

}  // namespace shortdf
