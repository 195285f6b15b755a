#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "plasticity/benchmarks/task_stream.hpp"

namespace plasticity {

// Key/value lines "<benchmark>.train = a, b" relative to the manifest's
// directory. '#' starts a comment.
using DataManifest = std::map<std::string, std::vector<std::filesystem::path>>;

DataManifest read_manifest(const std::filesystem::path& file);

/// Loads the base datasets a benchmark draws from. Uses
/// <data_dir>/manifest.txt when it names the benchmark, otherwise the
/// standard distribution file names (optionally gzipped):
///   MNIST      train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-*
///   CIFAR-10   cifar-10-batches-bin/data_batch_{1..5}.bin, test_batch.bin
///   CIFAR-100  cifar-100-binary/train.bin, test.bin
/// Throws std::runtime_error naming the missing file.
BenchmarkData load_benchmark_data(BenchmarkKind kind, const std::filesystem::path& data_dir);

}  // namespace plasticity
