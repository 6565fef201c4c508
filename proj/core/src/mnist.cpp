#include "snnfaultlab/mnist.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "snnfaultlab/rng.hpp"

namespace snnfaultlab::mnist {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_u32_be(std::span<const std::uint8_t> bytes, std::size_t offset) {
    if (offset + 4 > bytes.size()) throw ParseError("truncated IDX header");
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void write_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    // 16 + MAX_WBITS: expect a gzip wrapper.
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw ParseError("zlib init failed");
    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("corrupt gzip stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    }
    inflateEnd(&zs);
    return out;
}

}  // namespace

ImageSet parse_idx_images(std::span<const std::uint8_t> bytes, bool strict_dims) {
    const std::uint32_t magic = read_u32_be(bytes, 0);
    if (magic != kImageMagic) {
        throw ParseError(magic == kLabelMagic ? "not an image file (label magic 2049)"
                                              : "not an IDX image file (bad magic)");
    }
    ImageSet set;
    set.count = read_u32_be(bytes, 4);
    set.rows = read_u32_be(bytes, 8);
    set.cols = read_u32_be(bytes, 12);
    if (set.rows != 28 || set.cols != 28) {
        if (strict_dims) throw ParseError("image dimensions are not 28x28");
        std::cerr << "mnist: note: image dimensions " << set.rows << "x" << set.cols
                  << " (expected 28x28)\n";
    }
    const std::size_t payload = std::size_t(set.count) * set.rows * set.cols;
    if (bytes.size() < 16 + payload) throw ParseError("truncated IDX image payload");
    if (bytes.size() > 16 + payload) throw ParseError("trailing bytes after IDX image payload");
    set.pixels.assign(bytes.begin() + 16, bytes.end());
    return set;
}

LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = read_u32_be(bytes, 0);
    if (magic != kLabelMagic) {
        throw ParseError(magic == kImageMagic ? "not a label file (image magic 2051)"
                                              : "not an IDX label file (bad magic)");
    }
    LabelSet set;
    set.count = read_u32_be(bytes, 4);
    if (bytes.size() < 8 + set.count) throw ParseError("truncated IDX label payload");
    if (bytes.size() > 8 + set.count) throw ParseError("trailing bytes after IDX label payload");
    set.labels.assign(bytes.begin() + 8, bytes.end());
    for (std::uint8_t l : set.labels)
        if (l > 9) throw ParseError("label byte " + std::to_string(int(l)) + " out of range 0..9");
    return set;
}

std::vector<std::uint8_t> serialize_idx_images(const ImageSet& images) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.pixels.size());
    write_u32_be(out, kImageMagic);
    write_u32_be(out, images.count);
    write_u32_be(out, images.rows);
    write_u32_be(out, images.cols);
    out.insert(out.end(), images.pixels.begin(), images.pixels.end());
    return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const LabelSet& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.labels.size());
    write_u32_be(out, kLabelMagic);
    write_u32_be(out, labels.count);
    out.insert(out.end(), labels.labels.begin(), labels.labels.end());
    return out;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes);
    return bytes;
}

ImageSet load_images(const std::string& path) {
    return parse_idx_images(read_file_maybe_gzip(path));
}

LabelSet load_labels(const std::string& path) {
    return parse_idx_labels(read_file_maybe_gzip(path));
}

std::pair<ImageSet, LabelSet> select_subset(const ImageSet& images, const LabelSet& labels,
                                            std::size_t n, std::uint64_t seed) {
    if (images.count != labels.count)
        throw ParseError("image/label counts differ: " + std::to_string(images.count) + " vs " +
                         std::to_string(labels.count));
    if (n > images.count)
        throw ParseError("requested subset of " + std::to_string(n) + " from " +
                         std::to_string(images.count) + " records");

    // Partial Fisher-Yates over the index range, then restore input order.
    std::vector<std::uint32_t> idx(images.count);
    for (std::uint32_t i = 0; i < images.count; ++i) idx[i] = i;
    Rng rng(Rng::derive(seed, 0xDA7A5E7));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());

    ImageSet out_images;
    out_images.count = static_cast<std::uint32_t>(n);
    out_images.rows = images.rows;
    out_images.cols = images.cols;
    out_images.pixels.reserve(n * images.rows * images.cols);
    LabelSet out_labels;
    out_labels.count = static_cast<std::uint32_t>(n);
    out_labels.labels.reserve(n);
    for (std::uint32_t i : idx) {
        auto img = images.image(i);
        out_images.pixels.insert(out_images.pixels.end(), img.begin(), img.end());
        out_labels.labels.push_back(labels.labels[i]);
    }
    return {std::move(out_images), std::move(out_labels)};
}

}  // namespace snnfaultlab::mnist
