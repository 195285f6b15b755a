#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "plasticity/tensor.hpp"

namespace plasticity {

/// Labeled images, pixels in [0, 1], stored (N x C x H x W).
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const { return Shape(images.shape().begin() + 1, images.shape().end()); }
  std::size_t sample_size() const { return size() == 0 ? 0 : images.size() / size(); }
  std::span<const float> sample(std::size_t i) const {
    return images.values().subspan(i * sample_size(), sample_size());
  }
  // Throws FormatError if labels or pixels break the invariants.
  void validate() const;
};

enum class CifarVariant { cifar10, cifar100 };

// Big-endian IDX pair: images magic 0x00000803 (N x rows x cols), labels
// magic 0x00000801. Gzipped files are read transparently. Pixels are
// scaled by 1/255.
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_mnist_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels);

// CIFAR binary batches: 3073-byte records (label, 3072 pixels) for CIFAR-10,
// 3074-byte records (coarse, fine, 3072 pixels) for CIFAR-100, where the
// fine label is kept. Several batch files are concatenated in order.
Dataset load_cifar_binary(std::span<const std::filesystem::path> paths, CifarVariant variant);
Dataset load_cifar_binary(const std::filesystem::path& path, CifarVariant variant);
void write_cifar_binary(const Dataset& data, const std::filesystem::path& path, CifarVariant variant);

// Whole file, gunzipped when it carries a gzip header.
std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);

}  // namespace plasticity
