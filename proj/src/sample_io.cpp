// SPDX-License-Identifier: Apache-2.0
#include "shortdf/sample_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "shortdf/png_io.hpp"

namespace shortdf {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'D', 'F', 'S', 'A', 'M', 'P', '\x01'};

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

void write_sample_file(const std::filesystem::path& path, const Sample& s,
                       const SampleFileMeta& meta) {
    json header;
    header["shape"] = {s.batch, s.dims};
    header["dtype"] = "f64";
    header["seed"] = meta.seed;
    header["sigma_n"] = meta.sigma_n;
    header["path"] = meta.path;
    header["model_role"] = meta.model_role;
    header["checkpoint_id"] = meta.checkpoint_id;
    header["space"] = meta.space;
    if (s.image) {
        header["image_shape"] = {s.image->channels, s.image->height, s.image->width};
    }

    const std::string header_text = header.dump();
    std::string out(kMagic, sizeof(kMagic));
    put_u64_le(out, header_text.size());
    out += header_text;
    for (double d : s.data) put_u64_le(out, std::bit_cast<std::uint64_t>(d));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_sample_file: cannot open " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_sample_file: write failed for " + path.string());
}

SampleFile read_sample_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_sample_file: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kMagic) + 8 ||
        std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("read_sample_file: " + path.string() + " is not a sample file");
    }
    const std::uint64_t header_len =
        get_u64_le(reinterpret_cast<const unsigned char*>(bytes.data()) + sizeof(kMagic));
    const std::size_t header_off = sizeof(kMagic) + 8;
    if (header_off + header_len > bytes.size()) {
        throw std::runtime_error("read_sample_file: truncated header in " + path.string());
    }
    const json header = json::parse(bytes.substr(header_off, header_len));

    SampleFile out;
    out.data.batch = header.at("shape").at(0).get<std::size_t>();
    out.data.dims = header.at("shape").at(1).get<std::size_t>();
    out.meta.seed = header.at("seed").get<std::uint64_t>();
    out.meta.sigma_n = header.at("sigma_n").get<double>();
    out.meta.path = header.at("path").get<std::vector<int>>();
    out.meta.model_role = header.at("model_role").get<std::string>();
    out.meta.checkpoint_id = header.at("checkpoint_id").get<std::string>();
    out.meta.space = header.at("space").get<std::string>();
    if (header.contains("image_shape")) {
        out.data.image = ImageShape{header["image_shape"].at(0).get<std::size_t>(),
                                    header["image_shape"].at(1).get<std::size_t>(),
                                    header["image_shape"].at(2).get<std::size_t>()};
    }

    const std::size_t count = out.data.batch * out.data.dims;
    if (header_off + header_len + count * 8 > bytes.size()) {
        throw std::runtime_error("read_sample_file: truncated payload in " + path.string());
    }
    out.data.data.resize(count);
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(bytes.data()) + header_off + header_len;
    for (std::size_t i = 0; i < count; ++i) {
        out.data.data[i] = std::bit_cast<double>(get_u64_le(p + i * 8));
    }
    return out;
}

void write_sample_text(const std::filesystem::path& path, const Sample& s) {
    if (s.dims != 2) throw std::invalid_argument("write_sample_text: expects 2D point sets");
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("write_sample_text: cannot open " + path.string());
    char buf[96];
    for (std::size_t b = 0; b < s.batch; ++b) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", s.at(b, 0), s.at(b, 1));
        f << buf;
    }
}

void write_contact_sheet(const std::filesystem::path& path, const Sample& s) {
    if (!s.image) throw std::invalid_argument("write_contact_sheet: sample has no image shape");
    const auto shape = *s.image;
    if (shape.channels != 1 && shape.channels != 3) {
        throw std::invalid_argument("write_contact_sheet: supports 1 or 3 channels");
    }

    const std::size_t cols =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(s.batch))));
    const std::size_t rows = (s.batch + cols - 1) / cols;

    PngImage sheet;
    sheet.width = cols * shape.width;
    sheet.height = rows * shape.height;
    sheet.channels = shape.channels;
    sheet.pixels.assign(sheet.width * sheet.height * sheet.channels, 0);

    for (std::size_t b = 0; b < s.batch; ++b) {
        const std::size_t tile_x = (b % cols) * shape.width;
        const std::size_t tile_y = (b / cols) * shape.height;
        const double* src = s.row(b);
        for (std::size_t c = 0; c < shape.channels; ++c) {
            for (std::size_t y = 0; y < shape.height; ++y) {
                for (std::size_t x = 0; x < shape.width; ++x) {
                    double v = src[(c * shape.height + y) * shape.width + x];
                    v = std::clamp(v, 0.0, 1.0);
                    const std::size_t px = tile_x + x, py = tile_y + y;
                    sheet.pixels[(py * sheet.width + px) * sheet.channels + c] =
                        static_cast<std::uint8_t>(std::lround(v * 255.0));
                }
            }
        }
    }
    write_png(path, sheet);
}

}  // namespace shortdf
