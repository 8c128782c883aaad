#include "gcgm/experiments.hpp"

#include <fstream>
#include <iterator>
#include <numbers>

namespace gcgm {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& path) {
    if (buf.size() < offset + 4) {
        throw FormatError(path + ": truncated IDX header", static_cast<std::int64_t>(buf.size()));
    }
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - uniform() lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

DataMatrix gen_synthetic(std::uint64_t seed, int n, int d) {
    require(n >= 1 && d >= 1, "gen_synthetic: n and d must be positive");
    Rng rng(seed);
    DataMatrix data{Matrix(n, d), Vector::Ones(n)};
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) data.A(i, k) = rng.normal();
    }
    return data;
}

DataMatrix load_mnist_pair(const std::string& images_path, const std::string& labels_path,
                           std::pair<int, int> digits) {
    require(digits.first != digits.second, "load_mnist_pair: the two digits must differ");
    const auto images = slurp(images_path);
    const auto labels = slurp(labels_path);

    if (read_be32(labels, 0, labels_path) != kIdxLabelsMagic) {
        throw FormatError(labels_path + ": bad magic number for an IDX label file", 0);
    }
    if (read_be32(images, 0, images_path) != kIdxImagesMagic) {
        throw FormatError(images_path + ": bad magic number for an IDX image file", 0);
    }
    const std::uint32_t label_count = read_be32(labels, 4, labels_path);
    const std::uint32_t image_count = read_be32(images, 4, images_path);
    const std::uint32_t rows = read_be32(images, 8, images_path);
    const std::uint32_t cols = read_be32(images, 12, images_path);
    if (image_count != label_count) {
        throw FormatError(images_path + ": image count " + std::to_string(image_count) +
                              " does not match label count " + std::to_string(label_count),
                          4);
    }
    const std::size_t pixels = std::size_t{rows} * cols;
    if (pixels == 0) throw FormatError(images_path + ": empty image dimensions", 8);
    if (labels.size() != 8 + std::size_t{label_count}) {
        throw FormatError(labels_path + ": file length does not match the label count",
                          static_cast<std::int64_t>(std::min(labels.size(), 8 + std::size_t{label_count})));
    }
    if (images.size() != 16 + pixels * image_count) {
        throw FormatError(images_path + ": file length does not match the image count",
                          static_cast<std::int64_t>(std::min(images.size(), 16 + pixels * image_count)));
    }

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < label_count; ++i) {
        const int label = labels[8 + i];
        if (label == digits.first || label == digits.second) keep.push_back(i);
    }

    DataMatrix data{Matrix(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(pixels)),
                    Vector(static_cast<Eigen::Index>(keep.size()))};
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const std::size_t i = keep[r];
        const unsigned char* px = images.data() + 16 + i * pixels;
        for (std::size_t k = 0; k < pixels; ++k) {
            data.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = px[k] / 255.0;
        }
        data.b(static_cast<Eigen::Index>(r)) = labels[8 + i] == digits.first ? -1.0 : 1.0;
    }
    return data;
}

}  // namespace gcgm
