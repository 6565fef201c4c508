#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace snnfaultlab::mnist {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ImageSet {
    std::uint32_t count = 0;
    std::uint32_t rows = 28;
    std::uint32_t cols = 28;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major

    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * rows * cols, rows * cols};
    }
};

struct LabelSet {
    std::uint32_t count = 0;
    std::vector<std::uint8_t> labels;  // each in 0..9
};

// IDX container parsers (big-endian headers, magic 2051 / 2049). When
// `strict_dims` is set, images whose dimensions are not 28x28 are rejected;
// otherwise they only produce a note on stderr.
ImageSet parse_idx_images(std::span<const std::uint8_t> bytes, bool strict_dims = false);
LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_idx_images(const ImageSet& images);
std::vector<std::uint8_t> serialize_idx_labels(const LabelSet& labels);

// Reads a file, transparently inflating gzip-compressed content.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path);

ImageSet load_images(const std::string& path);
LabelSet load_labels(const std::string& path);

// Deterministic sample of n records without replacement. The output keeps
// the original record order of the sampled indices.
std::pair<ImageSet, LabelSet> select_subset(const ImageSet& images, const LabelSet& labels,
                                            std::size_t n, std::uint64_t seed);

}  // namespace snnfaultlab::mnist
