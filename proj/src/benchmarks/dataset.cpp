#include "plasticity/benchmarks/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;
constexpr std::size_t kCifarPixels = 3072;

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const fs::path& path) {
  if (offset + 4 > bytes.size()) throw FormatError(path.string() + ": truncated IDX header");
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
  out.write(b, 4);
}

unsigned char to_byte(float v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (images.rank() < 2 || images.dim(0) != labels.size()) {
    throw FormatError("dataset: " + std::to_string(labels.size()) + " labels for images " + to_string(images.shape()));
  }
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw FormatError("dataset: label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes) + ")");
  }
  for (float v : images.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw FormatError("dataset: pixel outside [0, 1]");
  }
}

std::vector<unsigned char> read_file_bytes(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("missing file " + path.string());
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (file == nullptr) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char chunk[1 << 16];
  for (;;) {
    const int n = gzread(file, chunk, sizeof(chunk));
    if (n < 0) {
      gzclose(file);
      throw FormatError(path.string() + ": corrupt compressed stream");
    }
    if (n == 0) break;
    bytes.insert(bytes.end(), chunk, chunk + n);
  }
  gzclose(file);
  return bytes;
}

Dataset load_mnist_idx(const fs::path& images_path, const fs::path& labels_path) {
  const auto img = read_file_bytes(images_path);
  const auto lab = read_file_bytes(labels_path);
  if (const auto magic = read_be32(img, 0, images_path); magic != kIdxImages) {
    throw FormatError(images_path.string() + ": bad IDX image magic " + std::to_string(magic));
  }
  if (const auto magic = read_be32(lab, 0, labels_path); magic != kIdxLabels) {
    throw FormatError(labels_path.string() + ": bad IDX label magic " + std::to_string(magic));
  }
  const std::size_t n = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  const std::size_t n_labels = read_be32(lab, 4, labels_path);
  if (n != n_labels) {
    throw FormatError("IDX count mismatch: " + std::to_string(n) + " images vs " + std::to_string(n_labels) + " labels");
  }
  if (img.size() < 16 + n * rows * cols) throw FormatError(images_path.string() + ": truncated image data");
  if (lab.size() < 8 + n) throw FormatError(labels_path.string() + ": truncated label data");

  Dataset d;
  d.num_classes = 10;
  d.images = Tensor({n, 1, rows, cols});
  for (std::size_t i = 0; i < n * rows * cols; ++i) d.images[i] = float(img[16 + i]) / 255.0f;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = lab[8 + i];
  d.validate();
  return d;
}

void write_mnist_idx(const Dataset& data, const fs::path& images_path, const fs::path& labels_path) {
  const Shape s = data.sample_shape();
  const std::size_t rows = s.size() >= 2 ? s[s.size() - 2] : 1;
  const std::size_t cols = s.empty() ? 1 : s.back();
  auto img = open_out(images_path);
  write_be32(img, kIdxImages);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(cols));
  for (float v : data.images.values()) img.put(static_cast<char>(to_byte(v)));
  auto lab = open_out(labels_path);
  write_be32(lab, kIdxLabels);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int l : data.labels) lab.put(static_cast<char>(l));
}

Dataset load_cifar_binary(std::span<const fs::path> paths, CifarVariant variant) {
  const std::size_t label_bytes = variant == CifarVariant::cifar10 ? 1 : 2;
  const std::size_t record = label_bytes + kCifarPixels;
  std::vector<unsigned char> all;
  for (const fs::path& path : paths) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() % record != 0) {
      throw FormatError(path.string() + ": length " + std::to_string(bytes.size()) +
                        " is not a multiple of the " + std::to_string(record) + "-byte record");
    }
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  const std::size_t n = all.size() / record;
  Dataset d;
  d.num_classes = variant == CifarVariant::cifar10 ? 10 : 100;
  d.images = Tensor({n, 3, 32, 32});
  d.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const unsigned char* rec = all.data() + r * record;
    d.labels[r] = rec[label_bytes - 1];
    float* dst = d.images.data() + r * kCifarPixels;
    for (std::size_t i = 0; i < kCifarPixels; ++i) dst[i] = float(rec[label_bytes + i]) / 255.0f;
  }
  d.validate();
  return d;
}

Dataset load_cifar_binary(const fs::path& path, CifarVariant variant) {
  return load_cifar_binary(std::span<const fs::path>(&path, 1), variant);
}

void write_cifar_binary(const Dataset& data, const fs::path& path, CifarVariant variant) {
  if (data.sample_size() != kCifarPixels) throw ShapeError("CIFAR records hold 3x32x32 images");
  auto out = open_out(path);
  for (std::size_t r = 0; r < data.size(); ++r) {
    // coarse labels are not tracked; written as 0
    if (variant == CifarVariant::cifar100) out.put(0);
    out.put(static_cast<char>(data.labels[r]));
    for (float v : data.sample(r)) out.put(static_cast<char>(to_byte(v)));
  }
}

}  // namespace plasticity
