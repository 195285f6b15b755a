#include "plasticity/benchmarks/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Accepts either the plain name or name.gz.
fs::path find_file(const fs::path& p) {
  if (fs::exists(p)) return p;
  fs::path gz = p;
  gz += ".gz";
  if (fs::exists(gz)) return gz;
  throw std::runtime_error("data file not found: " + p.string() + "[.gz]");
}

bool is_mnist(BenchmarkKind k) {
  return k == BenchmarkKind::permuted_mnist || k == BenchmarkKind::random_label_mnist;
}

std::shared_ptr<const Dataset> load_split(BenchmarkKind kind, const std::vector<fs::path>& files) {
  if (is_mnist(kind)) {
    if (files.size() != 2) throw ConfigError("MNIST splits need exactly two files: images, labels");
    return std::make_shared<const Dataset>(load_mnist_idx(find_file(files[0]), find_file(files[1])));
  }
  std::vector<fs::path> found;
  for (const auto& f : files) found.push_back(find_file(f));
  const CifarVariant v =
      kind == BenchmarkKind::class_split_cifar100 ? CifarVariant::cifar100 : CifarVariant::cifar10;
  return std::make_shared<const Dataset>(load_cifar_binary(found, v));
}

bool needs_test(BenchmarkKind kind) {
  return kind == BenchmarkKind::permuted_mnist || kind == BenchmarkKind::class_split_cifar100;
}

}  // namespace

DataManifest read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open manifest " + file.string());
  DataManifest out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(file.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::vector<fs::path> paths;
    std::stringstream rest(line.substr(eq + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      item = trim(item);
      if (!item.empty()) paths.push_back(file.parent_path() / item);
    }
    out[trim(line.substr(0, eq))] = std::move(paths);
  }
  return out;
}

BenchmarkData load_benchmark_data(BenchmarkKind kind, const fs::path& data_dir) {
  const std::string name(to_string(kind));
  std::vector<fs::path> train_files, test_files;
  const fs::path manifest = data_dir / "manifest.txt";
  bool from_manifest = false;
  if (fs::exists(manifest)) {
    const DataManifest m = read_manifest(manifest);
    if (auto it = m.find(name + ".train"); it != m.end()) {
      from_manifest = true;
      train_files = it->second;
      if (auto jt = m.find(name + ".test"); jt != m.end()) test_files = jt->second;
    }
  }
  if (!from_manifest) {
    if (is_mnist(kind)) {
      train_files = {data_dir / "train-images-idx3-ubyte", data_dir / "train-labels-idx1-ubyte"};
      test_files = {data_dir / "t10k-images-idx3-ubyte", data_dir / "t10k-labels-idx1-ubyte"};
    } else if (kind == BenchmarkKind::class_split_cifar100) {
      train_files = {data_dir / "cifar-100-binary" / "train.bin"};
      test_files = {data_dir / "cifar-100-binary" / "test.bin"};
    } else {
      for (int i = 1; i <= 5; ++i) {
        train_files.push_back(data_dir / "cifar-10-batches-bin" / ("data_batch_" + std::to_string(i) + ".bin"));
      }
      test_files = {data_dir / "cifar-10-batches-bin" / "test_batch.bin"};
    }
  }
  BenchmarkData data;
  data.train = load_split(kind, train_files);
  if (needs_test(kind) && !test_files.empty()) {
    try {
      data.test = load_split(kind, test_files);
    } catch (const std::runtime_error&) {
      if (from_manifest) throw;
      // Standard layout without a test split: run without test accuracy.
    }
  }
  return data;
}

}  // namespace plasticity
