#include "plasticity/grad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace kernels {

void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n,
          bool accumulate) {
  std::vector<double> row(n);
  for (std::size_t i = 0; i < m; ++i) {
    float* out = c + i * n;
    if (accumulate) {
      for (std::size_t j = 0; j < n; ++j) row[j] = out[j];
    } else {
      std::fill(row.begin(), row.end(), 0.0);
    }
    const float* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = arow[p];
      if (s == 0.0) continue;
      const float* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * double(brow[j]);
    }
    for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<float>(row[j]);
  }
}

void transpose(const float* a, float* b, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) b[j * rows + i] = a[i * cols + j];
}

}  // namespace kernels

namespace {

enum class Broadcast { none, left, right };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() == b.shape()) return Broadcast::none;
  if (a.size() == 1) return Broadcast::left;
  if (b.size() == 1) return Broadcast::right;
  throw ShapeError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()) + " do not broadcast");
}

// Adds `contrib` into `grad`, summing when grad is a broadcast scalar.
void accumulate(Tensor& grad, const std::vector<float>& contrib) {
  if (grad.size() == contrib.size()) {
    for (std::size_t i = 0; i < contrib.size(); ++i) grad[i] += contrib[i];
    return;
  }
  double total = 0.0;
  for (float v : contrib) total += v;
  grad[0] += static_cast<float>(total);
}

template <class Fn>
Var binary(OpKind op, Var a, Var b, Fn fn, BackwardFn backward) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast mode = broadcast_mode(av, bv, to_string(op));
  Tensor out(mode == Broadcast::left ? bv.shape() : av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float x = mode == Broadcast::left ? av[0] : av[i];
    const float y = mode == Broadcast::right ? bv[0] : bv[i];
    out[i] = fn(x, y);
  }
  const Var inputs[] = {a, b};
  return a.tape().record(op, inputs, std::move(out), std::move(backward));
}

float at(const Tensor& t, std::size_t i) { return t.size() == 1 ? t[0] : t[i]; }

// Unary op whose derivative is a function of (input, output).
template <class Fwd, class Deriv>
Var unary(OpKind op, Var x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  const Var inputs[] = {x};
  return x.tape().record(op, inputs, std::move(out), [deriv](const BackwardArgs& args) {
    Tensor* gx = args.input_grads[0];
    if (gx == nullptr) return;
    const Tensor& xv = *args.inputs[0];
    for (std::size_t i = 0; i < xv.size(); ++i) {
      (*gx)[i] += args.upstream[i] * deriv(xv[i], args.output[i]);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(OpKind::add, a, b, [](float x, float y) { return x + y; },
                [](const BackwardArgs& args) {
                  std::vector<float> up(args.upstream.values().begin(), args.upstream.values().end());
                  if (args.input_grads[0]) accumulate(*args.input_grads[0], up);
                  if (args.input_grads[1]) accumulate(*args.input_grads[1], up);
                });
}

Var sub(Var a, Var b) {
  return binary(OpKind::sub, a, b, [](float x, float y) { return x - y; },
                [](const BackwardArgs& args) {
                  std::vector<float> up(args.upstream.values().begin(), args.upstream.values().end());
                  if (args.input_grads[0]) accumulate(*args.input_grads[0], up);
                  for (float& v : up) v = -v;
                  if (args.input_grads[1]) accumulate(*args.input_grads[1], up);
                });
}

Var mul(Var a, Var b) {
  return binary(OpKind::mul, a, b, [](float x, float y) { return x * y; },
                [](const BackwardArgs& args) {
                  const Tensor& av = *args.inputs[0];
                  const Tensor& bv = *args.inputs[1];
                  const std::size_t n = args.upstream.size();
                  std::vector<float> contrib(n);
                  if (args.input_grads[0]) {
                    for (std::size_t i = 0; i < n; ++i) contrib[i] = args.upstream[i] * at(bv, i);
                    accumulate(*args.input_grads[0], contrib);
                  }
                  if (args.input_grads[1]) {
                    for (std::size_t i = 0; i < n; ++i) contrib[i] = args.upstream[i] * at(av, i);
                    accumulate(*args.input_grads[1], contrib);
                  }
                });
}

Var neg(Var x) {
  return unary(OpKind::neg, x, [](float v) { return -v; }, [](float, float) { return -1.0f; });
}

Var abs(Var x) {
  // d|x|/dx taken as +1 at 0
  return unary(OpKind::abs, x, [](float v) { return std::fabs(v); },
               [](float v, float) { return v < 0.0f ? -1.0f : 1.0f; });
}

Var cos(Var x) {
  return unary(OpKind::cos, x, [](float v) { return std::cos(v); },
               [](float v, float) { return -std::sin(v); });
}

Var sin(Var x) {
  return unary(OpKind::sin, x, [](float v) { return std::sin(v); },
               [](float v, float) { return std::cos(v); });
}

Var exp(Var x) {
  return unary(OpKind::exp, x, [](float v) { return std::exp(v); },
               [](float, float out) { return out; });
}

Var tanh(Var x) {
  return unary(OpKind::tanh, x, [](float v) { return std::tanh(v); },
               [](float, float out) { return 1.0f - out * out; });
}

Var scale(Var x, float factor) {
  return unary(OpKind::scale, x, [factor](float v) { return factor * v; },
               [factor](float, float) { return factor; });
}

Var sum(Var x) {
  const Var inputs[] = {x};
  return x.tape().record(OpKind::sum, inputs, Tensor::scalar(static_cast<float>(x.value().sum())),
                         [](const BackwardArgs& args) {
                           Tensor* gx = args.input_grads[0];
                           if (gx == nullptr) return;
                           const float up = args.upstream[0];
                           for (float& v : gx->values()) v += up;
                         });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const Var inputs[] = {x};
  return x.tape().record(OpKind::reshape, inputs, std::move(out), [](const BackwardArgs& args) {
    Tensor* gx = args.input_grads[0];
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += args.upstream[i];
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + to_string(av.shape()) + " by " +
                     to_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  kernels::gemm(av.data(), bv.data(), out.data(), m, k, n);
  const Var inputs[] = {a, b};
  return a.tape().record(OpKind::matmul, inputs, std::move(out), [m, k, n](const BackwardArgs& args) {
    const Tensor& g = args.upstream;
    if (Tensor* ga = args.input_grads[0]) {
      std::vector<float> bt(n * k);
      kernels::transpose(args.inputs[1]->data(), bt.data(), k, n);
      kernels::gemm(g.data(), bt.data(), ga->data(), m, n, k, true);
    }
    if (Tensor* gb = args.input_grads[1]) {
      std::vector<float> at(k * m);
      kernels::transpose(args.inputs[0]->data(), at.data(), m, k);
      kernels::gemm(at.data(), g.data(), gb->data(), k, m, n, true);
    }
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 2 || bv.rank() != 1 || xv.dim(1) != bv.dim(0)) {
    throw ShapeError("add_bias: " + to_string(xv.shape()) + " + " + to_string(bv.shape()));
  }
  const std::size_t rows = xv.dim(0), n = xv.dim(1);
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] + bv[j];
  const Var inputs[] = {x, bias};
  return x.tape().record(OpKind::add_bias, inputs, std::move(out), [rows, n](const BackwardArgs& args) {
    const Tensor& g = args.upstream;
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
    }
    if (Tensor* gb = args.input_grads[1]) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += g[r * n + j];
        (*gb)[j] += static_cast<float>(acc);
      }
    }
  });
}

namespace {

struct ConvGeometry {
  std::size_t batch, in_ch, h, w, out_ch, kh, kw, oh, ow;
  std::size_t patch() const { return in_ch * kh * kw; }
  std::size_t spatial() const { return oh * ow; }
};

// cols (C*KH*KW x OH*OW) for one sample
void im2col(const float* img, const ConvGeometry& g, float* cols) {
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.in_ch; ++c)
    for (std::size_t ky = 0; ky < g.kh; ++ky)
      for (std::size_t kx = 0; kx < g.kw; ++kx, ++row) {
        float* dst = cols + row * g.spatial();
        for (std::size_t y = 0; y < g.oh; ++y) {
          const float* src = img + (c * g.h + y + ky) * g.w + kx;
          std::copy(src, src + g.ow, dst + y * g.ow);
        }
      }
}

void col2im_add(const float* cols, const ConvGeometry& g, float* img) {
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.in_ch; ++c)
    for (std::size_t ky = 0; ky < g.kh; ++ky)
      for (std::size_t kx = 0; kx < g.kw; ++kx, ++row) {
        const float* src = cols + row * g.spatial();
        for (std::size_t y = 0; y < g.oh; ++y) {
          float* dst = img + (c * g.h + y + ky) * g.w + kx;
          for (std::size_t x = 0; x < g.ow; ++x) dst[x] += src[y * g.ow + x];
        }
      }
}

}  // namespace

Var conv2d(Var input, Var kernels, Var bias) {
  const Tensor& iv = input.value();
  const Tensor& kv = kernels.value();
  const Tensor& bv = bias.value();
  const bool batched = iv.rank() == 4;
  if ((iv.rank() != 3 && !batched) || kv.rank() != 4) {
    throw ShapeError("conv2d: expected (B x)C x H x W input and O x C x KH x KW kernels, got " +
                     to_string(iv.shape()) + " and " + to_string(kv.shape()));
  }
  ConvGeometry g{};
  g.batch = batched ? iv.dim(0) : 1;
  g.in_ch = iv.dim(batched ? 1 : 0);
  g.h = iv.dim(batched ? 2 : 1);
  g.w = iv.dim(batched ? 3 : 2);
  g.out_ch = kv.dim(0);
  g.kh = kv.dim(2);
  g.kw = kv.dim(3);
  if (kv.dim(1) != g.in_ch) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kv.dim(1)) + " channels, input has " +
                     std::to_string(g.in_ch));
  }
  if (bv.size() != g.out_ch) throw ShapeError("conv2d: bias size must equal output channels");
  if (g.h < g.kh || g.w < g.kw) {
    throw ShapeError("conv2d: input " + to_string(iv.shape()) + " smaller than kernel " +
                     to_string(kv.shape()));
  }
  g.oh = g.h - g.kh + 1;
  g.ow = g.w - g.kw + 1;

  Shape out_shape = batched ? Shape{g.batch, g.out_ch, g.oh, g.ow} : Shape{g.out_ch, g.oh, g.ow};
  Tensor out(out_shape);
  const std::size_t in_stride = g.in_ch * g.h * g.w;
  const std::size_t out_stride = g.out_ch * g.spatial();
  auto cols = std::make_shared<std::vector<float>>(g.batch * g.patch() * g.spatial());
  for (std::size_t s = 0; s < g.batch; ++s) {
    float* c = cols->data() + s * g.patch() * g.spatial();
    im2col(iv.data() + s * in_stride, g, c);
    float* o = out.data() + s * out_stride;
    kernels::gemm(kv.data(), c, o, g.out_ch, g.patch(), g.spatial());
    for (std::size_t oc = 0; oc < g.out_ch; ++oc)
      for (std::size_t p = 0; p < g.spatial(); ++p) o[oc * g.spatial() + p] += bv[oc];
  }

  const Var inputs[] = {input, kernels, bias};
  return input.tape().record(
      OpKind::conv2d, inputs, std::move(out), [g, cols, in_stride, out_stride](const BackwardArgs& args) {
        const Tensor& up = args.upstream;
        const Tensor& kv = *args.inputs[1];
        std::vector<float> kt;
        std::vector<float> dcols;
        std::vector<float> ct;
        if (args.input_grads[0]) {
          kt.resize(g.patch() * g.out_ch);
          kernels::transpose(kv.data(), kt.data(), g.out_ch, g.patch());
          dcols.resize(g.patch() * g.spatial());
        }
        for (std::size_t s = 0; s < g.batch; ++s) {
          const float* gs = up.data() + s * out_stride;
          const float* c = cols->data() + s * g.patch() * g.spatial();
          if (Tensor* gk = args.input_grads[1]) {
            ct.resize(g.spatial() * g.patch());
            kernels::transpose(c, ct.data(), g.patch(), g.spatial());
            kernels::gemm(gs, ct.data(), gk->data(), g.out_ch, g.spatial(), g.patch(), true);
          }
          if (Tensor* gb = args.input_grads[2]) {
            for (std::size_t oc = 0; oc < g.out_ch; ++oc) {
              double acc = 0.0;
              for (std::size_t p = 0; p < g.spatial(); ++p) acc += gs[oc * g.spatial() + p];
              (*gb)[oc] += static_cast<float>(acc);
            }
          }
          if (Tensor* gi = args.input_grads[0]) {
            kernels::gemm(kt.data(), gs, dcols.data(), g.patch(), g.out_ch, g.spatial());
            col2im_add(dcols.data(), g, gi->data() + s * in_stride);
          }
        }
      });
}

Var maxpool2d(Var input) {
  const Tensor& iv = input.value();
  if (iv.rank() < 2) throw ShapeError("maxpool2d: need at least 2 spatial axes");
  const std::size_t h = iv.dim(iv.rank() - 2);
  const std::size_t w = iv.dim(iv.rank() - 1);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2d: spatial dims must be even, got " + to_string(iv.shape()));
  }
  const std::size_t planes = iv.size() / (h * w);
  const std::size_t oh = h / 2, ow = w / 2;
  Shape out_shape = iv.shape();
  out_shape[out_shape.size() - 2] = oh;
  out_shape[out_shape.size() - 1] = ow;
  Tensor out(out_shape);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const float* plane = iv.data() + p * h * w;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t cand[4] = {(2 * y) * w + 2 * x, (2 * y) * w + 2 * x + 1,
                                     (2 * y + 1) * w + 2 * x, (2 * y + 1) * w + 2 * x + 1};
        std::size_t best = cand[0];
        for (std::size_t c = 1; c < 4; ++c) {
          if (plane[cand[c]] > plane[best]) best = cand[c];
        }
        const std::size_t o = p * oh * ow + y * ow + x;
        out[o] = plane[best];
        (*argmax)[o] = p * h * w + best;
      }
  }
  const Var inputs[] = {input};
  return input.tape().record(OpKind::maxpool2d, inputs, std::move(out), [argmax](const BackwardArgs& args) {
    Tensor* gi = args.input_grads[0];
    if (gi == nullptr) return;
    for (std::size_t o = 0; o < argmax->size(); ++o) (*gi)[(*argmax)[o]] += args.upstream[o];
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2 || lv.dim(0) != labels.size()) {
    throw ShapeError("softmax_cross_entropy: logits " + to_string(lv.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t rows = lv.dim(0), classes = lv.dim(1);
  auto probs = std::make_shared<std::vector<double>>(rows * classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) +
                              " outside [0, " + std::to_string(classes) + ")");
    }
    const float* row = lv.data() + r * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(double(row[c]) - mx);
    const double log_z = mx + std::log(z);
    for (std::size_t c = 0; c < classes; ++c) (*probs)[r * classes + c] = std::exp(double(row[c]) - log_z);
    loss += log_z - double(row[label]);
  }
  loss /= double(rows);
  std::vector<int> targets(labels.begin(), labels.end());
  const Var inputs[] = {logits};
  return logits.tape().record(
      OpKind::softmax_cross_entropy, inputs, Tensor::scalar(static_cast<float>(loss)),
      [probs, targets = std::move(targets), rows, classes](const BackwardArgs& args) {
        Tensor* gl = args.input_grads[0];
        if (gl == nullptr) return;
        const double up = args.upstream[0] / double(rows);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < classes; ++c) {
            double d = (*probs)[r * classes + c] - (static_cast<int>(c) == targets[r] ? 1.0 : 0.0);
            (*gl)[r * classes + c] += static_cast<float>(up * d);
          }
      });
}

}  // namespace plasticity
