// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_PNG_IO_HPP
#define SHORTDF_PNG_IO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

namespace shortdf {

// 8-bit image buffer, row-major, interleaved channels (1 = gray, 3 = RGB).
struct PngImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    std::vector<std::uint8_t> pixels;
};

// Minimal PNG codec over zlib. Writing emits non-interlaced 8-bit gray/RGB;
// reading accepts non-interlaced 8-bit gray, gray+alpha, RGB and RGBA (alpha
// is dropped). Anything else is rejected with std::runtime_error naming the
// file.
void write_png(const std::filesystem::path& path, const PngImage& img);
PngImage read_png(const std::filesystem::path& path);

}  // namespace shortdf

#endif
