#include <doctest.h>

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "support.hpp"
#include "plasticity/benchmarks/manifest.hpp"
#include "plasticity/benchmarks/task_stream.hpp"
#include "plasticity/errors.hpp"

using namespace plasticity;
using namespace test_support;
namespace fs = std::filesystem;

namespace {

// Pixels on the k/255 lattice so the byte formats round-trip exactly.
Dataset synthetic(std::size_t n, Shape sample, int classes, std::uint64_t seed, std::size_t per_class = 0) {
  Rng rng(seed);
  Dataset d;
  sample.insert(sample.begin(), n);
  d.images = Tensor(sample);
  for (float& v : d.images.values()) v = static_cast<float>(rng.below(256)) / 255.0f;
  d.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    d.labels.push_back(per_class ? static_cast<int>(i / per_class) % classes : static_cast<int>(rng.below(classes)));
  }
  return d;
}

std::shared_ptr<const Dataset> shared(Dataset d) { return std::make_shared<const Dataset>(std::move(d)); }

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// A second, minimal IDX reader: gunzip everything, read the big-endian
// header fields by hand.
struct MiniIdx {
  std::uint32_t magic = 0, count = 0, rows = 0, cols = 0;
  std::vector<unsigned char> payload;
};

MiniIdx mini_idx(const fs::path& p, bool images) {
  gzFile f = gzopen(p.string().c_str(), "rb");
  REQUIRE(f != nullptr);
  std::vector<unsigned char> all;
  unsigned char buf[4096];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) all.insert(all.end(), buf, buf + n);
  gzclose(f);
  auto be = [&](std::size_t o) {
    return (std::uint32_t(all[o]) << 24) | (std::uint32_t(all[o + 1]) << 16) | (std::uint32_t(all[o + 2]) << 8) |
           all[o + 3];
  };
  MiniIdx m;
  m.magic = be(0);
  m.count = be(4);
  std::size_t off = 8;
  if (images) {
    m.rows = be(8);
    m.cols = be(12);
    off = 16;
  }
  m.payload.assign(all.begin() + off, all.end());
  return m;
}

}  // namespace

TEST_SUITE("benchmarks") {
  TEST_CASE("IDX round trip, plain and gzipped") {
    const auto dir = scratch_dir("idx");
    const Dataset d = synthetic(2, {1, 28, 28}, 10, 1);
    write_mnist_idx(d, dir / "img", dir / "lab");
    const Dataset back = load_mnist_idx(dir / "img", dir / "lab");
    CHECK(back.images == d.images);
    CHECK(back.labels == d.labels);
    CHECK(back.num_classes == 10);

    for (const char* name : {"img", "lab"}) {
      const auto bytes = read_file_bytes(dir / name);
      gzFile f = gzopen((dir / (std::string(name) + ".gz")).string().c_str(), "wb");
      gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
      gzclose(f);
    }
    const Dataset gz = load_mnist_idx(dir / "img.gz", dir / "lab.gz");
    CHECK(gz.images == d.images);
  }

  TEST_CASE("IDX format errors") {
    const auto dir = scratch_dir("idx-bad");
    write_mnist_idx(synthetic(3, {1, 28, 28}, 10, 2), dir / "img", dir / "lab");
    auto img = read_file_bytes(dir / "img");
    auto lab = read_file_bytes(dir / "lab");

    auto bad_magic = img;
    bad_magic[3] = 0x02;
    write_bytes(dir / "bad", bad_magic);
    CHECK_THROWS_AS(load_mnist_idx(dir / "bad", dir / "lab"), FormatError);
    CHECK_THROWS_AS(load_mnist_idx(dir / "lab", dir / "lab"), FormatError);

    write_bytes(dir / "short", std::vector<unsigned char>(img.begin(), img.end() - 10));
    CHECK_THROWS_AS(load_mnist_idx(dir / "short", dir / "lab"), FormatError);

    write_mnist_idx(synthetic(2, {1, 28, 28}, 10, 3), dir / "img2", dir / "lab2");
    CHECK_THROWS_AS(load_mnist_idx(dir / "img", dir / "lab2"), FormatError);
    CHECK_THROWS(load_mnist_idx(dir / "missing", dir / "lab"));
  }

  TEST_CASE("bundled MNIST subset agrees with a second parser") {
    const fs::path dir = data_dir() / "mnist-5k";
    const fs::path img = dir / "train-images-idx3-ubyte.gz", lab = dir / "train-labels-idx1-ubyte.gz";
    const Dataset d = load_mnist_idx(img, lab);
    const MiniIdx mi = mini_idx(img, true), ml = mini_idx(lab, false);
    CHECK(mi.magic == 2051);
    CHECK(ml.magic == 2049);
    REQUIRE(d.size() == mi.count);
    CHECK(d.size() == 5000);
    CHECK(d.sample_shape() == Shape{1, mi.rows, mi.cols});
    CHECK(d.labels.front() == ml.payload.front());
    CHECK(d.labels.back() == ml.payload.back());
    for (std::size_t i : {std::size_t(0), std::size_t(123456), mi.payload.size() - 1}) {
      CHECK(d.images[i] == static_cast<float>(mi.payload[i]) / 255.0f);
    }
    std::map<int, int> hist;
    for (int l : d.labels) ++hist[l];
    CHECK(hist.size() == 10);
    for (auto [label, count] : hist) CHECK(count == 500);
  }

  TEST_CASE("CIFAR round trip and record walker") {
    const auto dir = scratch_dir("cifar");
    for (CifarVariant v : {CifarVariant::cifar10, CifarVariant::cifar100}) {
      const int classes = v == CifarVariant::cifar10 ? 10 : 100;
      const Dataset d = synthetic(3, {3, 32, 32}, classes, 4);
      write_cifar_binary(d, dir / "b.bin", v);
      const Dataset back = load_cifar_binary(dir / "b.bin", v);
      CHECK(back.images == d.images);
      CHECK(back.labels == d.labels);
      CHECK(back.num_classes == classes);

      // Independent walk over the raw records.
      const auto bytes = read_file_bytes(dir / "b.bin");
      const std::size_t rec = v == CifarVariant::cifar10 ? 3073 : 3074;
      REQUIRE(bytes.size() == 3 * rec);
      for (std::size_t r = 0; r < 3; ++r) {
        CHECK(int(bytes[r * rec + rec - 3073]) == back.labels[r]);
        CHECK(back.images[r * 3072 + 0] == bytes[r * rec + rec - 3072] / 255.0f);
        CHECK(back.images[r * 3072 + 3071] == bytes[r * rec + rec - 1] / 255.0f);
      }
    }
    write_bytes(dir / "odd.bin", std::vector<unsigned char>(3072, 0));
    CHECK_THROWS_AS(load_cifar_binary(dir / "odd.bin", CifarVariant::cifar10), FormatError);

    const Dataset a = synthetic(2, {3, 32, 32}, 10, 5), b = synthetic(3, {3, 32, 32}, 10, 6);
    write_cifar_binary(a, dir / "a.bin", CifarVariant::cifar10);
    write_cifar_binary(b, dir / "b.bin", CifarVariant::cifar10);
    const std::vector<fs::path> both{dir / "a.bin", dir / "b.bin"};
    const Dataset ab = load_cifar_binary(both, CifarVariant::cifar10);
    CHECK(ab.size() == 5);
    CHECK(ab.labels[2] == b.labels[0]);
  }

  TEST_CASE("manifest and standard layouts") {
    const auto dir = scratch_dir("manifest");
    write_mnist_idx(synthetic(20, {1, 28, 28}, 10, 7), dir / "i.idx", dir / "l.idx");
    {
      std::ofstream m(dir / "manifest.txt");
      m << "# comment\nrandom_label_mnist.train = i.idx, l.idx\n";
    }
    const auto manifest = read_manifest(dir / "manifest.txt");
    CHECK(manifest.at("random_label_mnist.train").size() == 2);
    const BenchmarkData d = load_benchmark_data(BenchmarkKind::random_label_mnist, dir);
    CHECK(d.train->size() == 20);
    CHECK(d.test == nullptr);

    fs::create_directories(dir / "cifar-10-batches-bin");
    for (int i = 1; i <= 5; ++i) {
      write_cifar_binary(synthetic(2, {3, 32, 32}, 10, 10 + i),
                         dir / "cifar-10-batches-bin" / ("data_batch_" + std::to_string(i) + ".bin"),
                         CifarVariant::cifar10);
    }
    const BenchmarkData c = load_benchmark_data(BenchmarkKind::shuffle_label_cifar10, dir);
    CHECK(c.train->size() == 10);

    try {
      load_benchmark_data(BenchmarkKind::class_split_cifar100, dir);
      FAIL("expected a missing-file error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("train.bin") != std::string::npos);
    }

    const BenchmarkData bundled = load_benchmark_data(BenchmarkKind::random_label_mnist, data_dir());
    CHECK(bundled.train->size() == 5000);
  }

  TEST_CASE("benchmark defaults") {
    auto d = defaults_for(BenchmarkKind::permuted_mnist);
    CHECK(std::tuple(d.tasks, d.epochs, d.batch, d.images) == std::tuple(400, 1, 16, 10000));
    d = defaults_for(BenchmarkKind::random_label_mnist);
    CHECK(std::tuple(d.tasks, d.epochs, d.batch, d.images) == std::tuple(250, 200, 16, 1200));
    d = defaults_for(BenchmarkKind::random_label_cifar10);
    CHECK(std::tuple(d.tasks, d.epochs, d.batch, d.images) == std::tuple(100, 700, 16, 1200));
    d = defaults_for(BenchmarkKind::shuffle_label_cifar10);
    CHECK(std::tuple(d.tasks, d.epochs, d.batch, d.images, d.test_images) == std::tuple(100, 20, 16, 5000, 1000));
    d = defaults_for(BenchmarkKind::class_split_cifar100);
    CHECK(std::tuple(d.tasks, d.epochs, d.batch, d.images) == std::tuple(20, 20, 32, 2500));
    for (auto k : {BenchmarkKind::permuted_mnist, BenchmarkKind::random_label_mnist,
                   BenchmarkKind::random_label_cifar10, BenchmarkKind::shuffle_label_cifar10,
                   BenchmarkKind::class_split_cifar100})
      CHECK(parse_benchmark_kind(to_string(k)) == k);
  }

  TEST_CASE("permuted MNIST") {
    auto train = shared(synthetic(300, {1, 28, 28}, 10, 20));
    auto test = shared(synthetic(50, {1, 28, 28}, 10, 21));
    const TaskStream s = gen_permuted_mnist(train, test, 7, {.tasks = 3, .images = 100, .test_images = 40});
    CHECK(s.size() == 3);
    CHECK(s.epochs() == 1);
    CHECK(s.batch_size() == 16);
    const TaskSpec t0 = s.task(0), t1 = s.task(1);
    CHECK(t0.size() == 100);
    CHECK(t0.indices == t1.indices);

    auto perm = *t0.pixel_permutation;
    std::sort(perm.begin(), perm.end());
    for (std::size_t i = 0; i < 784; ++i) REQUIRE(perm[i] == i);
    CHECK(*t0.pixel_permutation != *t1.pixel_permutation);

    // Same mapping for two different images.
    const std::vector<std::size_t> two{0, 1};
    const Tensor x = t0.gather_images(two);
    const auto& p = *t0.pixel_permutation;
    for (std::size_t j : {0, 100, 783}) {
      CHECK(x[j] == train->sample(t0.indices[0])[p[j]]);
      CHECK(x[784 + j] == train->sample(t0.indices[1])[p[j]]);
    }
    for (std::size_t i = 0; i < t0.size(); ++i) REQUIRE(t0.labels[i] == train->labels[t0.indices[i]]);

    const auto tt = s.test_task(1);
    REQUIRE(tt.has_value());
    CHECK(tt->size() == 40);
    CHECK(*tt->pixel_permutation == *t1.pixel_permutation);
    CHECK(tt->base == test);

    CHECK_THROWS(gen_permuted_mnist(train, test, 7, {.images = 301}));
    CHECK_FALSE(gen_permuted_mnist(train, nullptr, 7, {.tasks = 1, .images = 10}).test_task(0).has_value());
  }

  TEST_CASE("random labels") {
    auto train = shared(synthetic(2000, {1, 28, 28}, 10, 22));
    const TaskStream s = gen_random_label(train, RandomLabelVariant::mnist, 3, {.tasks = 50});
    CHECK(s.epochs() == 200);
    CHECK(s.kind() == BenchmarkKind::random_label_mnist);
    std::vector<TaskSpec> tasks;
    for (std::size_t t = 0; t < 50; ++t) tasks.push_back(s.task(t));
    std::size_t changed = 0, pairs = 0;
    for (std::size_t t = 0; t < 50; ++t) {
      CHECK(tasks[t].indices == tasks[0].indices);
      CHECK(tasks[t].size() == 1200);
      std::vector<int> counts(10, 0);
      for (int l : tasks[t].labels) ++counts[l];
      double chi2 = 0.0;
      for (int c : counts) chi2 += (c - 120.0) * (c - 120.0) / 120.0;
      CHECK(chi2 < 27.88);  // 9 dof, p = 0.001
      if (t > 0) {
        for (std::size_t i = 0; i < 1200; ++i) changed += tasks[t].labels[i] != tasks[t - 1].labels[i];
        pairs += 1200;
      }
    }
    const double p = double(changed) / pairs;
    CHECK(std::abs(p - 0.9) < 3 * std::sqrt(0.9 * 0.1 / pairs));
    CHECK_FALSE(s.test_task(0).has_value());

    auto cifar = shared(synthetic(1300, {3, 4, 4}, 10, 23));
    const TaskStream c = gen_random_label(cifar, RandomLabelVariant::cifar10, 3, {.tasks = 2});
    CHECK(c.epochs() == 700);
    CHECK(c.task(1).size() == 1200);
  }

  TEST_CASE("shuffled labels") {
    auto train = shared(synthetic(700, {3, 4, 4}, 10, 24));
    const TaskStream s = gen_shuffle_label(train, 5, {.tasks = 4, .images = 500, .test_images = 100});
    std::vector<std::vector<int>> maps;
    for (std::size_t t = 0; t < 4; ++t) {
      const TaskSpec task = s.task(t);
      std::map<int, int> pi;
      for (std::size_t i = 0; i < task.size(); ++i) {
        const int c = train->labels[task.indices[i]];
        auto [it, fresh] = pi.emplace(c, task.labels[i]);
        REQUIRE(it->second == task.labels[i]);
      }
      std::set<int> image;
      std::vector<int> m(10);
      for (auto [c, l] : pi) {
        image.insert(l);
        m[c] = l;
      }
      CHECK(image.size() == pi.size());
      maps.push_back(m);

      auto before = task.labels;
      std::vector<int> mapped;
      for (std::size_t i : task.indices) mapped.push_back(m[train->labels[i]]);
      CHECK(mapped == before);

      const auto test = s.test_task(t);
      REQUIRE(test.has_value());
      CHECK(test->size() == 100);
      for (std::size_t i = 0; i < test->size(); ++i) {
        REQUIRE(test->labels[i] == m[train->labels[test->indices[i]]]);
        REQUIRE(std::find(task.indices.begin(), task.indices.end(), test->indices[i]) == task.indices.end());
      }
    }
    CHECK(maps[0] != maps[1]);
  }

  TEST_CASE("class split at full size") {
    auto train = shared(synthetic(50000, {3, 2, 2}, 100, 25, 500));
    auto test = shared(synthetic(10000, {3, 2, 2}, 100, 26, 100));
    const TaskStream s = gen_class_split(train, test, 9);
    CHECK(s.size() == 20);
    CHECK(s.batch_size() == 32);
    std::set<int> all;
    for (std::size_t t = 0; t < 20; ++t) {
      const TaskSpec task = s.task(t);
      CHECK(task.size() == 2500);
      const auto cls = s.task_classes(t);
      std::set<int> mine(cls.begin(), cls.end());
      CHECK(mine.size() == 5);
      for (int c : cls) CHECK(all.insert(c).second);
      std::map<int, int> per;
      for (int l : task.labels) {
        REQUIRE(mine.count(l));
        ++per[l];
      }
      for (auto [c, n] : per) CHECK(n == 500);
    }
    CHECK(all.size() == 100);

    const auto t0 = s.test_task(0), t3 = s.test_task(3);
    REQUIRE(t0.has_value());
    CHECK(t0->size() == 500);
    CHECK(t3->size() == 2000);

    const TaskStream again = gen_class_split(train, test, 9);
    CHECK(again.task(7).indices == s.task(7).indices);

    auto small = shared(synthetic(1000, {3, 2, 2}, 100, 27, 10));
    CHECK_THROWS(gen_class_split(small, nullptr, 1));
    CHECK_NOTHROW(gen_class_split(small, nullptr, 1, {.images = 50}));
  }

  TEST_CASE("batch schedule") {
    auto train = shared(synthetic(100, {1, 28, 28}, 10, 28));
    const TaskStream s = gen_random_label(train, RandomLabelVariant::mnist, 1, {.tasks = 2, .epochs = 3, .batch = 16, .images = 50});
    const TaskSpec t = s.task(0);
    CHECK(t.batches_per_epoch() == 4);
    CHECK(t.total_batches() == 12);
    auto o0 = t.epoch_order(0), o1 = t.epoch_order(1);
    CHECK(o0 != o1);
    CHECK(o0 == t.epoch_order(0));
    std::sort(o0.begin(), o0.end());
    for (std::size_t i = 0; i < o0.size(); ++i) REQUIRE(o0[i] == i);
    CHECK(s.task(0).order_seed != s.task(1).order_seed);
  }

  TEST_CASE("streams regenerate tasks in isolation and leave the base alone") {
    auto train = shared(synthetic(500, {1, 28, 28}, 10, 29));
    const Dataset copy = *train;
    const StreamOverrides ov{.tasks = 10, .images = 200};
    const TaskStream a = gen_permuted_mnist(train, nullptr, 11, ov);
    for (std::size_t t = 0; t < 10; ++t) a.task(t).gather_images(std::vector<std::size_t>{0, 1, 2});
    const TaskStream b = gen_permuted_mnist(train, nullptr, 11, ov);
    const TaskSpec x = a.task(9), y = b.task(9);
    CHECK(x.indices == y.indices);
    CHECK(*x.pixel_permutation == *y.pixel_permutation);
    CHECK(x.epoch_order(0) == y.epoch_order(0));
    CHECK(gen_permuted_mnist(train, nullptr, 12, ov).task(9).indices != x.indices);
    CHECK(train->images == copy.images);
    CHECK(train->labels == copy.labels);
    CHECK_THROWS_AS(a.task(10), std::out_of_range);
  }
}
