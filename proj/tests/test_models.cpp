#include <doctest.h>

#include <cmath>
#include <fstream>

#include "support.hpp"
#include "plasticity/errors.hpp"
#include "plasticity/grad/ops.hpp"
#include "plasticity/models/checkpoint.hpp"
#include "plasticity/models/model.hpp"

using namespace plasticity;
using namespace test_support;

namespace {

ActivationSpec adalin(Granularity g = Granularity::neuron) {
  return {ActivationKind::adalin, BaseKind::relu, GateKind::cosine, g};
}

Parameter& param(Model& m, const std::string& name) {
  for (Parameter* p : m.parameters())
    if (p->name == name) return *p;
  throw std::runtime_error("no parameter " + name);
}

double loss_of(const Model& m, const Tensor& x, const std::vector<int>& labels) {
  Tape tape;
  return softmax_cross_entropy(tape.constant(m.predict(x)), labels).value().item();
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("reference parameter counts") {
    Rng rng(1);
    MlpSpec mlp;
    mlp.activation = adalin();
    const ParamAudit a = Model::mlp(mlp, rng).audit();
    CHECK(a.total == 89610);
    CHECK(a.alpha_added == 210);
    CHECK(a.overhead_pct == doctest::Approx(100.0 * 210 / 89610));
    CHECK(std::round(a.overhead_pct * 100) / 100 == 0.23);

    CnnSpec cnn;
    cnn.activation = adalin();
    const ParamAudit c = Model::cnn(cnn, rng).audit();
    CHECK(c.total == 39796);
    CHECK(c.alpha_added == 32);
    CHECK(std::round(c.overhead_pct * 100) / 100 == 0.08);
  }

  TEST_CASE("counts for other activations") {
    Rng rng(2);
    MlpSpec spec;
    spec.activation = {ActivationKind::plain, BaseKind::identity};
    CHECK(Model::mlp(spec, rng).audit().alpha_added == 0);
    spec.activation = adalin(Granularity::layer);
    CHECK(Model::mlp(spec, rng).audit().alpha_added == 2);
    spec.activation = adalin(Granularity::network);
    CHECK(Model::mlp(spec, rng).audit().alpha_added == 1);
    spec.activation = adalin();
    spec.output_alpha = false;
    CHECK(Model::mlp(spec, rng).audit().alpha_added == 200);

    for (ActivationKind k : {ActivationKind::crelu, ActivationKind::fourier}) {
      spec.activation = {k};
      const ParamAudit a = Model::mlp(spec, rng).audit();
      CHECK(a.total == 784 * 100 + 100 + 200 * 100 + 100 + 200 * 10 + 10);
      CHECK(a.total > 89610);
      CHECK(a.alpha_added == 0);
    }

    MlpSpec single;
    single.input_dim = 2;
    single.hidden = {};
    single.output_dim = 3;
    CHECK(Model::mlp(single, rng).audit().total == 9);
    single.hidden = {0};
    CHECK_THROWS_AS(Model::mlp(single, rng), ShapeError);
  }

  TEST_CASE("initialization scheme") {
    Rng rng(3);
    MlpSpec spec;
    spec.activation = adalin();
    Model m = Model::mlp(spec, rng);
    for (const Parameter* p : m.parameters()) {
      if (p->role == ParamRole::bias) {
        for (float v : p->value.values()) REQUIRE(v == 0.0f);
      } else if (p->role == ParamRole::alpha) {
        for (float v : p->value.values()) {
          REQUIRE(v >= 0.0f);
          REQUIRE(v < 1.0f);
        }
      } else {
        const double bound = 1.0 / std::sqrt(double(p->value.dim(0)));
        for (float v : p->value.values()) REQUIRE(std::abs(v) <= bound);
      }
    }
  }

  TEST_CASE("zero final layer gives zero logits") {
    Rng rng(4);
    Model m = Model::mlp(MlpSpec{}, rng);
    param(m, "W2").value.fill(0.0f);
    const Tensor logits = m.predict(Tensor({3, 784}));
    CHECK(logits == Tensor({3, 10}));
  }

  TEST_CASE("same seed, same logits") {
    Rng input_rng(5);
    const Tensor x = random_tensor({4, 1, 28, 28}, input_rng, 0, 1);
    MlpSpec spec;
    spec.activation = adalin();
    Rng r1(9), r2(9);
    const Model a = Model::mlp(spec, r1), b = Model::mlp(spec, r2);
    CHECK(a.predict(x) == b.predict(x));
    Tape tape;
    Model c = a.clone();
    CHECK(c.forward(tape, x).value() == a.predict(x));
  }

  TEST_CASE("4-3-2 tanh MLP against hand arithmetic") {
    Rng rng(6);
    MlpSpec spec{4, {3}, 2, {ActivationKind::plain, BaseKind::tanh}};
    Model m = Model::mlp(spec, rng);
    Parameter& b0 = param(m, "b0");
    Parameter& b1 = param(m, "b1");
    for (std::size_t i = 0; i < 3; ++i) b0.value[i] = 0.1f * float(i) - 0.1f;
    for (std::size_t i = 0; i < 2; ++i) b1.value[i] = 0.05f * float(i + 1);
    const Tensor& W0 = param(m, "W0").value;
    const Tensor& W1 = param(m, "W1").value;
    const Tensor x({2, 4}, {0.5f, -1.0f, 0.25f, 2.0f, -0.3f, 0.7f, 1.1f, 0.0f});
    const Tensor y = m.predict(x);
    for (std::size_t r = 0; r < 2; ++r) {
      double h[3];
      for (std::size_t j = 0; j < 3; ++j) {
        double s = b0.value[j];
        for (std::size_t i = 0; i < 4; ++i) s += double(x[r * 4 + i]) * W0[i * 3 + j];
        h[j] = std::tanh(s);
      }
      for (std::size_t k = 0; k < 2; ++k) {
        double s = b1.value[k];
        for (std::size_t j = 0; j < 3; ++j) s += h[j] * W1[j * 2 + k];
        CHECK(std::abs(y[r * 2 + k] - s) < 1e-6);
      }
    }
  }

  TEST_CASE("parameter gradients of small networks match finite differences") {
    Rng rng(7);
    const std::vector<int> labels{1, 0, 1};
    for (ActivationSpec act : {ActivationSpec{ActivationKind::plain, BaseKind::tanh},
                               ActivationSpec{ActivationKind::adalin, BaseKind::gelu, GateKind::cosine},
                               ActivationSpec{ActivationKind::crelu}}) {
      Model m = Model::mlp(MlpSpec{4, {3}, 2, act}, rng);
      const Tensor x = random_tensor({3, 4}, rng);
      {
        Tape tape;
        tape.backward(softmax_cross_entropy(m.forward(tape, x), labels));
      }
      for (Parameter* p : m.parameters()) {
        if (p->name == "alpha_out") continue;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
          const float v0 = p->value[i];
          const double h = 1e-3;
          // Gate values are held fixed in the tape's gradient, so for AdaLin
          // only the alpha entries are comparable with plain differences.
          if (act.kind == ActivationKind::adalin && p->role != ParamRole::alpha) continue;
          p->value[i] = float(v0 + h);
          const double up = loss_of(m, x, labels);
          p->value[i] = float(v0 - h);
          const double down = loss_of(m, x, labels);
          p->value[i] = v0;
          REQUIRE(rel_err(p->grad[i], (up - down) / (2 * h), 1e-1) < 1e-3);
        }
      }
    }
  }

  TEST_CASE("trace records every activated layer") {
    Rng rng(8);
    MlpSpec spec;
    spec.activation = adalin();
    const Model m = Model::mlp(spec, rng);
    ForwardTrace trace;
    m.predict(Tensor({5, 784}), &trace);
    REQUIRE(trace.pre.size() == 2);
    CHECK(trace.pre[0].shape() == Shape{5, 100});
    CHECK(trace.post[1].shape() == Shape{5, 100});

    CnnSpec cs;
    cs.activation = {ActivationKind::crelu};
    const Model c = Model::cnn(cs, rng);
    ForwardTrace ct;
    const Tensor logits = c.predict(Tensor({2, 3, 32, 32}), &ct);
    CHECK(logits.shape() == Shape{2, 100});
    REQUIRE(ct.pre.size() == 3);
    CHECK(ct.pre[0].shape() == Shape{2, 16, 28, 28});
    CHECK(ct.post[0].shape() == Shape{2, 32, 28, 28});
    CHECK(ct.pre[1].shape() == Shape{2, 16, 10, 10});
    CHECK(ct.pre[2].shape() == Shape{2, 64});
    CHECK(c.activated_layers()[0].units == 16);
  }

  TEST_CASE("cnn alphas live on conv channels") {
    Rng rng(9);
    CnnSpec cs;
    cs.activation = adalin();
    const Model c = Model::cnn(cs, rng);
    const auto& layers = c.activated_layers();
    REQUIRE(layers.size() == 3);
    CHECK(layers[0].alpha_layer.has_value());
    CHECK(layers[1].alpha_layer.has_value());
    CHECK_FALSE(layers[2].alpha_layer.has_value());
    CHECK(c.alphas()->count() == 32);
  }

  TEST_CASE("input shape mismatch is an error") {
    Rng rng(10);
    const Model m = Model::mlp(MlpSpec{}, rng);
    CHECK_THROWS_AS(m.predict(Tensor({2, 783})), ShapeError);
    const Model c = Model::cnn(CnnSpec{}, rng);
    CHECK_THROWS_AS(c.predict(Tensor({2, 1, 32, 32})), ShapeError);
  }

  TEST_CASE("reinitialize redraws everything") {
    Rng rng(11);
    MlpSpec spec;
    spec.activation = adalin();
    Model m = Model::mlp(spec, rng);
    Rng in(12);
    const Tensor x = random_tensor({3, 784}, in, 0, 1);
    const Tensor before = m.predict(x);
    Rng r1(13), r2(13);
    m.reinitialize(r1);
    const Tensor after = m.predict(x);
    CHECK(after != before);
    Model n = m.clone();
    n.reinitialize(r2);
    Rng r3(13);
    m.reinitialize(r3);
    CHECK(n.predict(x) == m.predict(x));
  }

  TEST_CASE("checkpoint round trip") {
    const auto dir = scratch_dir("ckpt");
    Rng rng(14);
    MlpSpec spec;
    spec.activation = adalin();
    Model m = Model::mlp(spec, rng);
    save_checkpoint(m, dir / "m.ckpt");

    std::ifstream in(dir / "m.ckpt", std::ios::binary);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("plasticity-checkpoint 1 W0:weight:784x100 b0:bias:100", 0) == 0);
    CHECK(line.find("alpha_out:alpha:10") != std::string::npos);
    CHECK(std::filesystem::file_size(dir / "m.ckpt") == line.size() + 1 + 4 * (89610 + 210));

    Rng other(15);
    Model n = Model::mlp(spec, other);
    load_checkpoint(n, dir / "m.ckpt");
    for (std::size_t i = 0; i < m.parameters().size(); ++i)
      CHECK(m.parameters()[i]->value == n.parameters()[i]->value);

    Model plain = Model::mlp(MlpSpec{}, other);
    CHECK_THROWS_AS(load_checkpoint(plain, dir / "m.ckpt"), FormatError);
    std::filesystem::resize_file(dir / "m.ckpt", std::filesystem::file_size(dir / "m.ckpt") - 4);
    CHECK_THROWS_AS(load_checkpoint(n, dir / "m.ckpt"), FormatError);
  }
}
