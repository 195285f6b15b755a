#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "support.hpp"
#include "plasticity/cli/plan.hpp"
#include "plasticity/cli/plot.hpp"
#include "plasticity/errors.hpp"

using namespace plasticity;
using namespace test_support;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

DataCache synthetic_cache() {
  return DataCache([](BenchmarkKind) {
    Rng rng(1);
    Dataset d;
    d.images = Tensor({120, 1, 28, 28});
    for (float& v : d.images.values()) v = static_cast<float>(rng.uniform(0.0, 1.0));
    d.num_classes = 10;
    for (std::size_t i = 0; i < 120; ++i) d.labels.push_back(static_cast<int>(rng.below(10)));
    return BenchmarkData{std::make_shared<const Dataset>(std::move(d)), nullptr};
  });
}

constexpr std::string_view kSmall =
    "benchmark = random_label_mnist\n"
    "method = baseline, adalin\n"
    "tasks = 2\nepochs = 1\nimages = 48\nprobe_cap = 16\n"
    "seeds = 0, 1\n";

ResultRow row(std::string method, std::uint64_t seed, std::size_t task, double acc) {
  ResultRow r;
  r.run_id = method + std::to_string(seed);
  r.method = std::move(method);
  r.benchmark = "random_label_mnist";
  r.seed = seed;
  r.task = task;
  r.avg_online_acc = acc;
  return r;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("minimal config takes defaults") {
    const auto plan = expand(parse_config_text("benchmark = permuted_mnist\nmethod = adalin\n"));
    REQUIRE(plan.cells.size() == 1);
    const RunConfig& c = plan.cells[0].config;
    CHECK(c.lr == 1e-2);
    CHECK(c.overrides.batch == 16u);
    CHECK(c.base == BaseKind::relu);
    CHECK(c.gate == GateKind::cosine);
    CHECK(c.granularity == Granularity::neuron);
    CHECK(plan.cells[0].seed == 0);
    CHECK(plan.cells[0].run_id.size() == 16);
    const auto cs = expand(parse_config_text("benchmark = class_split_cifar100\nmethod = baseline\n"));
    CHECK(cs.cells[0].config.overrides.batch == 32u);
  }

  TEST_CASE("sweeps expand to the cross product") {
    const auto plan = expand(parse_config_text(
        "benchmark = random_label_mnist\nmethod = adalin\nlr = 0.01, 0.001\nseeds = 0, 1, 2\n"));
    REQUIRE(plan.cells.size() == 6);
    std::set<std::string> ids;
    for (const auto& c : plan.cells) ids.insert(c.run_id);
    CHECK(ids.size() == 6);
    CHECK(plan.cells[0].config.lr == 0.01);
    CHECK(plan.cells[2].config.lr == 0.01);
    CHECK(plan.cells[3].config.lr == 0.001);
    CHECK(plan.cells[1].seed == 1);
    CHECK(plan.cells[1].config.seeds == std::vector<std::uint64_t>{1});
    // Same run, same id.
    CHECK(expand(parse_config_text("benchmark = random_label_mnist\nmethod = adalin\nlr = 0.001\nseeds = 2\n"))
              .cells[0]
              .run_id == plan.cells[5].run_id);
  }

  TEST_CASE("config errors name the problem") {
    try {
      parse_config_text("benchmark = permuted_mnist\nmethod = adalin\nlearning_rate = 0.1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("learning_rate") != std::string::npos);
      CHECK(msg.find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("lr = 0.1\nlr = 0.2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("lr = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("lr = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("gate = sideways\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just words\n"), ConfigError);
    CHECK_THROWS_AS(expand(parse_config_text("method = adalin\n")), ConfigError);
    CHECK_THROWS_AS(expand(parse_config_text("benchmark = permuted_mnist\n")), ConfigError);
  }

  TEST_CASE("config round trip") {
    const std::string text =
        "# sweep\nbenchmark = shuffle_label_cifar10\nmethod = adalin, l2\ngate = cosine, none\n"
        "lr = 0.003\nseeds = 4, 5\nmetrics = false\nl2_lambda = 0.001\n";
    const ConfigSweep s = parse_config_text(text);
    CHECK(parse_config_text(serialize_config(s)) == s);
    CHECK(expand(parse_config_text(serialize_config(s))).cells.size() == 8);
  }

  TEST_CASE("method labels") {
    RunConfig c;
    c.method = Method::adalin;
    CHECK(method_label(c) == "adalin");
    c.gate = GateKind::none;
    CHECK(method_label(c) == "adalin-gate=none");
    RunConfig b;
    b.base = BaseKind::tanh;
    CHECK(method_label(b) == "baseline-tanh");
  }

  TEST_CASE("result rows round trip") {
    std::vector<ResultRow> rows{row("adalin", 0, 0, 0.1), row("adalin", 0, 1, 1.0 / 3.0)};
    rows[1].test_acc = 0.25;
    rows[1].sign_entropy = 0.123456789012345;
    rows[1].weight_norm = 12.5;
    rows[1].srank_mean = 42;
    const std::string csv = format_rows(rows);
    CHECK(csv.substr(0, kResultHeader.size()) == kResultHeader);
    CHECK(parse_rows(csv) == rows);
    CHECK(format_rows(parse_rows(csv)) == csv);
    CHECK(metric_value(rows[1], "test_acc") == 0.25);
    CHECK_FALSE(metric_value(rows[0], "test_acc").has_value());
    CHECK_THROWS_AS(metric_value(rows[0], "loss"), std::invalid_argument);
  }

  TEST_CASE("atomic writes leave no temporary behind") {
    const auto dir = scratch_dir("atomic");
    write_file_atomic(dir / "a.txt", "one");
    write_file_atomic(dir / "a.txt", "two");
    CHECK(slurp(dir / "a.txt") == "two");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
    CHECK(files == 1);
  }

  TEST_CASE("empty plan writes only the header") {
    const auto dir = scratch_dir("empty");
    DataCache cache = synthetic_cache();
    const ResultTable t = run_plan(ExperimentPlan{}, cache, {.out_dir = dir});
    CHECK(t.rows.empty());
    CHECK(slurp(dir / "results.csv") == std::string(kResultHeader) + "\n");
    CHECK_FALSE(fs::exists(dir / "failures.csv"));
  }

  TEST_CASE("plan results do not depend on the job count") {
    const auto plan = expand(parse_config_text(kSmall));
    REQUIRE(plan.cells.size() == 4);
    const auto d1 = scratch_dir("jobs1"), d3 = scratch_dir("jobs3");
    DataCache cache = synthetic_cache();
    const ResultTable a = run_plan(plan, cache, {.out_dir = d1, .jobs = 1});
    const ResultTable b = run_plan(plan, cache, {.out_dir = d3, .jobs = 3});
    CHECK(a == b);
    CHECK(a.rows.size() == 8);
    CHECK(a.failures.empty());
    CHECK(slurp(d1 / "results.csv") == slurp(d3 / "results.csv"));
    for (const auto& c : plan.cells) {
      CHECK(fs::exists(d1 / "runs" / (c.run_id + ".csv")));
      CHECK(fs::exists(d1 / "runs" / (c.run_id + ".meta.txt")));
      CHECK(fs::exists(d1 / "runs" / (c.run_id + ".heatmap.csv")) == (c.config.method == Method::adalin));
    }
    CHECK(read_result_csv(d1 / "results.csv") == a.rows);
    CHECK(a.rows[0].method == "baseline");
    CHECK(a.rows[4].method == "adalin");

    const std::string heat = slurp(d1 / "runs" / (plan.cells[2].run_id + ".heatmap.csv"));
    CHECK(heat.substr(0, kHeatmapHeader.size()) == kHeatmapHeader);
  }

  TEST_CASE("resume reads finished cells back") {
    const auto plan = expand(parse_config_text(kSmall));
    const auto dir = scratch_dir("resume");
    DataCache cache = synthetic_cache();
    run_plan(plan, cache, {.out_dir = dir});
    // Doctor one finished cell; a resumed run must keep it, a fresh run must not.
    const fs::path cell = dir / "runs" / (plan.cells[1].run_id + ".csv");
    auto rows = read_result_csv(cell);
    rows[0].avg_online_acc = 0.5;
    write_file_atomic(cell, format_rows(rows));
    const ResultTable resumed = run_plan(plan, cache, {.out_dir = dir, .resume = true});
    CHECK(resumed.rows[2].avg_online_acc == 0.5);
    const ResultTable rerun = run_plan(plan, cache, {.out_dir = dir});
    CHECK(rerun.rows[2].avg_online_acc != 0.5);
  }

  TEST_CASE("a failing cell is reported and the rest still run") {
    const auto plan = expand(parse_config_text(
        "benchmark = random_label_mnist\nmethod = baseline\nlr = 1e30, 0.01\n"
        "tasks = 2\nepochs = 1\nimages = 48\nmetrics = false\n"));
    const auto dir = scratch_dir("failure");
    DataCache cache = synthetic_cache();
    const ResultTable t = run_plan(plan, cache, {.out_dir = dir});
    REQUIRE(t.failures.size() == 1);
    CHECK(t.failures[0].run_id == plan.cells[0].run_id);
    CHECK(fs::exists(dir / "failures.csv"));
    CHECK(slurp(dir / "failures.csv").find(plan.cells[0].run_id) != std::string::npos);
    CHECK(std::count_if(t.rows.begin(), t.rows.end(),
                        [&](const ResultRow& r) { return r.run_id == plan.cells[1].run_id; }) == 2);

    const auto ok = expand(parse_config_text(
        "benchmark = random_label_mnist\nmethod = baseline\ntasks = 1\nepochs = 1\nimages = 48\n"));
    run_plan(ok, cache, {.out_dir = dir});
    CHECK_FALSE(fs::exists(dir / "failures.csv"));
  }

  TEST_CASE("plot statistics") {
    std::vector<ResultRow> rows;
    for (std::uint64_t s = 0; s < 3; ++s) {
      rows.push_back(row("flat", s, 0, 0.4));
      rows.push_back(row("flat", s, 1, 0.4));
    }
    rows.push_back(row("spread", 0, 0, 0.2));
    rows.push_back(row("spread", 1, 0, 0.4));
    rows.push_back(row("spread", 2, 0, 0.9));
    const auto series = plot_series(rows, "avg_online_acc");
    REQUIRE(series.size() == 2);
    CHECK(series[0].method == "flat");
    CHECK(series[0].tasks == std::vector<std::size_t>{0, 1});
    CHECK(series[0].stddev == std::vector<double>{0.0, 0.0});
    CHECK(series[0].count[0] == 3);
    const double mean = (0.2 + 0.4 + 0.9) / 3;
    const double var = ((0.2 - mean) * (0.2 - mean) + (0.4 - mean) * (0.4 - mean) + (0.9 - mean) * (0.9 - mean)) / 3;
    CHECK(series[1].mean[0] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(series[1].stddev[0] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

    CHECK_THROWS_AS(plot_series(rows, "loss"), std::invalid_argument);
    CHECK_THROWS_AS(plot_series(rows, "test_acc"), std::invalid_argument);

    const std::string svg = render_svg(series, "avg_online_acc");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("data-method=\"spread\"") != std::string::npos);
    const auto dir = scratch_dir("plot");
    emit_plot(rows, "avg_online_acc", dir / "p.svg");
    CHECK(slurp(dir / "p.svg") == svg);
  }
}
