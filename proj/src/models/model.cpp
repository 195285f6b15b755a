#include "plasticity/models/model.hpp"

#include <algorithm>
#include <cmath>

#include "plasticity/activations/graph.hpp"
#include "plasticity/errors.hpp"
#include "plasticity/grad/ops.hpp"

namespace plasticity {

namespace {

// Interpolation alphas are stored pre-sigmoid; keep the logit finite.
float logit_of_uniform(Rng& rng) {
  const double u = std::clamp(rng.uniform(), 1e-3, 1.0 - 1e-3);
  return static_cast<float>(std::log(u / (1.0 - u)));
}

}  // namespace

Parameter& Model::add_param(std::string name, Shape shape, ParamRole role) {
  std::size_t fan_in = 0;
  if (role == ParamRole::weight) {
    // dense (in x out): fan-in is rows; conv (out x in x k x k): in * k * k
    fan_in = shape.size() == 2 ? shape[0] : numel(shape) / shape[0];
  }
  params_.push_back(std::make_unique<Parameter>(std::move(name), Tensor(std::move(shape)), role));
  fan_in_.push_back(fan_in);
  return *params_.back();
}

void Model::init_weights(Rng& rng) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.role == ParamRole::weight) {
      const double bound = 1.0 / std::sqrt(double(fan_in_[i]));
      for (float& v : p.value.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    } else {
      p.value.fill(0.0f);
    }
  }
}

void Model::init_alphas(Rng& rng) {
  if (alphas_) {
    if (activation_.gate == GateKind::interpolation) {
      for (Parameter* p : alphas_->parameters())
        for (float& v : p->value.values()) v = logit_of_uniform(rng);
    } else {
      alphas_->initialize(rng, 0.0, 1.0);
    }
  }
  if (output_alpha_) {
    for (float& v : output_alpha_->value.values()) v = static_cast<float>(rng.uniform());
  }
}

Model Model::mlp(const MlpSpec& spec, Rng& rng) {
  if (spec.input_dim == 0 || spec.output_dim == 0 ||
      std::any_of(spec.hidden.begin(), spec.hidden.end(), [](std::size_t h) { return h == 0; })) {
    throw ShapeError("MLP dimensions must be positive");
  }
  Model m;
  m.activation_ = spec.activation;
  m.output_dim_ = spec.output_dim;
  std::size_t in = spec.input_dim;
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    const std::size_t out = spec.hidden[l];
    m.steps_.push_back({StepKind::dense, m.params_.size(), 0});
    m.add_param("W" + std::to_string(l), {in, out}, ParamRole::weight);
    m.add_param("b" + std::to_string(l), {out}, ParamRole::bias);
    ActivatedLayer layer{out, spec.activation, std::nullopt};
    if (spec.activation.has_alpha()) layer.alpha_layer = l;
    m.steps_.push_back({StepKind::activation, 0, m.activated_.size()});
    m.activated_.push_back(layer);
    in = out * spec.activation.width_factor();
  }
  const std::size_t last = spec.hidden.size();
  m.steps_.push_back({StepKind::dense, m.params_.size(), 0});
  m.add_param("W" + std::to_string(last), {in, spec.output_dim}, ParamRole::weight);
  m.add_param("b" + std::to_string(last), {spec.output_dim}, ParamRole::bias);

  if (spec.activation.has_alpha()) {
    m.alphas_ = std::make_unique<AlphaStore>(spec.activation.granularity, spec.hidden);
    if (spec.output_alpha && spec.activation.granularity == Granularity::neuron) {
      m.output_alpha_ = std::make_unique<Parameter>("alpha_out", Tensor({spec.output_dim}), ParamRole::alpha);
      m.steps_.push_back({StepKind::output_alpha, 0, 0});
    }
  }
  m.init_weights(rng);
  m.init_alphas(rng);
  return m;
}

Model Model::cnn(const CnnSpec& spec, Rng& rng) {
  const std::size_t k = spec.kernel;
  std::size_t h = spec.height, w = spec.width;
  auto after_block = [k](std::size_t s) -> std::size_t {
    if (s < k || (s - k + 1) % 2 != 0) return 0;
    return (s - k + 1) / 2;
  };
  const std::size_t h2 = after_block(after_block(h)), w2 = after_block(after_block(w));
  if (h2 == 0 || w2 == 0 || spec.in_channels == 0 || spec.conv_channels == 0) {
    throw ShapeError("CNN spec: " + std::to_string(h) + "x" + std::to_string(w) +
                     " input does not survive two conv(" + std::to_string(k) + ")+pool blocks");
  }
  Model m;
  m.cnn_ = true;
  m.activation_ = spec.activation;
  m.output_dim_ = spec.output_dim;
  const std::size_t widen = spec.activation.width_factor();
  ActivationSpec fc_act = spec.activation;
  if (fc_act.kind == ActivationKind::adalin && !spec.fc_alpha) fc_act.kind = ActivationKind::plain;

  std::vector<std::size_t> alpha_units;
  std::size_t in_ch = spec.in_channels;
  for (std::size_t l = 0; l < 2; ++l) {
    m.steps_.push_back({StepKind::conv, m.params_.size(), 0});
    m.add_param("K" + std::to_string(l), {spec.conv_channels, in_ch, k, k}, ParamRole::weight);
    m.add_param("c" + std::to_string(l), {spec.conv_channels}, ParamRole::bias);
    ActivatedLayer layer{spec.conv_channels, spec.activation, std::nullopt};
    if (spec.activation.has_alpha()) {
      layer.alpha_layer = alpha_units.size();
      alpha_units.push_back(spec.conv_channels);
    }
    m.steps_.push_back({StepKind::activation, 0, m.activated_.size()});
    m.activated_.push_back(layer);
    m.steps_.push_back({StepKind::pool, 0, 0});
    in_ch = spec.conv_channels * widen;
  }
  m.steps_.push_back({StepKind::flatten, 0, 0});
  const std::size_t flat = in_ch * h2 * w2;
  m.steps_.push_back({StepKind::dense, m.params_.size(), 0});
  m.add_param("W2", {flat, spec.fc_hidden}, ParamRole::weight);
  m.add_param("b2", {spec.fc_hidden}, ParamRole::bias);
  ActivatedLayer fc{spec.fc_hidden, fc_act, std::nullopt};
  if (fc_act.has_alpha()) {
    fc.alpha_layer = alpha_units.size();
    alpha_units.push_back(spec.fc_hidden);
  }
  m.steps_.push_back({StepKind::activation, 0, m.activated_.size()});
  m.activated_.push_back(fc);
  m.steps_.push_back({StepKind::dense, m.params_.size(), 0});
  m.add_param("W3", {spec.fc_hidden * widen, spec.output_dim}, ParamRole::weight);
  m.add_param("b3", {spec.output_dim}, ParamRole::bias);

  if (!alpha_units.empty()) {
    m.alphas_ = std::make_unique<AlphaStore>(spec.activation.granularity, alpha_units);
  }
  m.init_weights(rng);
  m.init_alphas(rng);
  return m;
}

Model Model::clone() const {
  Model m;
  m.cnn_ = cnn_;
  m.output_dim_ = output_dim_;
  m.activation_ = activation_;
  m.steps_ = steps_;
  m.activated_ = activated_;
  m.fan_in_ = fan_in_;
  for (const auto& p : params_) m.params_.push_back(std::make_unique<Parameter>(*p));
  if (alphas_) {
    const AlphaLayout& layout = alphas_->layout();
    std::vector<std::size_t> units;
    for (std::size_t l = 0; l < layout.layers(); ++l) units.push_back(layout.units(l));
    m.alphas_ = std::make_unique<AlphaStore>(layout.granularity(), units);
    for (std::size_t l = 0; l < layout.layers(); ++l) m.alphas_->layer_param(l) = alphas_->layer_param(l);
  }
  if (output_alpha_) m.output_alpha_ = std::make_unique<Parameter>(*output_alpha_);
  return m;
}

Var Model::forward(Tape& tape, const Tensor& batch, ForwardTrace* trace) {
  return forward_impl(tape, batch, trace, true);
}

Var Model::forward_impl(Tape& tape, const Tensor& batch, ForwardTrace* trace, bool bind_params) const {
  // Only the non-const forward() asks for bound parameters, so the cast
  // never reaches a const Model.
  auto bind = [&](const Parameter& p) {
    return bind_params ? tape.parameter(const_cast<Parameter&>(p)) : tape.constant(p.value);
  };
  if (batch.rank() < 2) throw ShapeError("forward: batch needs a leading batch axis, got " + to_string(batch.shape()));
  const std::size_t rows = batch.dim(0);
  Var x = tape.constant(cnn_ ? batch : batch.reshaped({rows, batch.size() / rows}));
  if (trace) {
    trace->pre.clear();
    trace->post.clear();
  }
  for (const Step& step : steps_) {
    switch (step.kind) {
      case StepKind::dense: {
        const Parameter& w = *params_[step.param];
        const Parameter& b = *params_[step.param + 1];
        if (x.value().rank() != 2 || x.value().dim(1) != w.value.dim(0)) {
          throw ShapeError("forward: input " + to_string(x.value().shape()) + " does not match " + w.name + " " +
                           to_string(w.value.shape()));
        }
        x = add_bias(matmul(x, bind(w)), bind(b));
        break;
      }
      case StepKind::conv: {
        const Parameter& kw = *params_[step.param];
        const Parameter& b = *params_[step.param + 1];
        x = conv2d(x, bind(kw), bind(b));
        break;
      }
      case StepKind::pool:
        x = maxpool2d(x);
        break;
      case StepKind::flatten: {
        const std::size_t n = x.value().dim(0);
        x = reshape(x, {n, x.value().size() / n});
        break;
      }
      case StepKind::activation: {
        const ActivatedLayer& layer = activated_[step.layer];
        if (trace) trace->pre.push_back(x.value());
        std::optional<Var> alpha;
        if (layer.alpha_layer) alpha = bind(alphas_->layer_param(*layer.alpha_layer));
        x = activate(x, layer.spec, alpha);
        if (trace) trace->post.push_back(x.value());
        break;
      }
      case StepKind::output_alpha: {
        ActivationSpec inert{ActivationKind::adalin, BaseKind::identity, GateKind::cosine, Granularity::neuron};
        x = activate(x, inert, bind(*output_alpha_));
        break;
      }
    }
  }
  return x;
}

Tensor Model::predict(const Tensor& batch, ForwardTrace* trace) const {
  Tape tape;
  return forward_impl(tape, batch, trace, false).value();
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  if (alphas_) {
    for (Parameter* p : alphas_->parameters()) out.push_back(p);
  }
  if (output_alpha_) out.push_back(output_alpha_.get());
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  if (alphas_) {
    for (std::size_t l = 0; l < alphas_->layout().layers(); ++l) {
      const Parameter* p = &alphas_->layer_param(l);
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
  }
  if (output_alpha_) out.push_back(output_alpha_.get());
  return out;
}

ParamAudit Model::audit() const {
  ParamAudit a;
  for (const Parameter* p : parameters()) {
    if (p->role == ParamRole::alpha) {
      a.alpha_added += p->value.size();
    } else {
      a.total += p->value.size();
    }
  }
  a.overhead_pct = a.total == 0 ? 0.0 : 100.0 * double(a.alpha_added) / double(a.total);
  return a;
}

void Model::reinitialize(Rng& rng) {
  init_weights(rng);
  init_alphas(rng);
  for (Parameter* p : parameters()) p->zero_grad();
}

std::vector<WeightMatrix> Model::weight_matrices() const {
  std::vector<WeightMatrix> out;
  for (const auto& p : params_) {
    if (p->role != ParamRole::weight) continue;
    const Shape& s = p->value.shape();
    out.push_back({p->name, s[0], p->value.size() / s[0], &p->value});
  }
  return out;
}

}  // namespace plasticity
