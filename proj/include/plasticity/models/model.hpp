#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plasticity/activations/activation.hpp"
#include "plasticity/activations/alpha_store.hpp"
#include "plasticity/grad/tape.hpp"
#include "plasticity/rng.hpp"

namespace plasticity {

struct MlpSpec {
  std::size_t input_dim = 784;
  std::vector<std::size_t> hidden{100, 100};
  std::size_t output_dim = 10;
  ActivationSpec activation;
  // With neuron-granularity AdaLin, also attach one alpha per output unit
  // through an identity base. The identity gate is 0 everywhere, so these
  // alphas never change the logits or receive gradient; they exist so the
  // parameter audit counts one alpha per neuron including outputs.
  bool output_alpha = true;
};

struct CnnSpec {
  std::size_t in_channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t conv_channels = 16;
  std::size_t kernel = 5;
  std::size_t fc_hidden = 64;
  std::size_t output_dim = 100;
  ActivationSpec activation;
  // AdaLin alphas on the fc hidden layer as well as the conv channels.
  bool fc_alpha = false;
};

struct ParamAudit {
  std::size_t total = 0;        // weights + biases
  std::size_t alpha_added = 0;  // role == alpha
  double overhead_pct = 0.0;    // 100 * alpha_added / total
};

// Pre- and post-activation values of every activated hidden layer.
struct ForwardTrace {
  std::vector<Tensor> pre;
  std::vector<Tensor> post;
};

struct ActivatedLayer {
  std::size_t units = 0;
  ActivationSpec spec;
  // Index into the AlphaStore when this layer reads alphas.
  std::optional<std::size_t> alpha_layer;
};

// A weight tensor viewed as (rows x cols) for rank analysis.
struct WeightMatrix {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  const Tensor* values = nullptr;
};

/// Sequential MLP or small CNN. Dense weights are stored (in x out) so the
/// forward pass is x * W + b; conv kernels are (out x in x k x k).
class Model {
 public:
  static Model mlp(const MlpSpec& spec, Rng& rng);
  static Model cnn(const CnnSpec& spec, Rng& rng);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model clone() const;

  // Logits for a batch. MLPs flatten anything past the batch axis.
  // Parameters are bound to the tape so backward() fills their gradients.
  Var forward(Tape& tape, const Tensor& batch, ForwardTrace* trace = nullptr);
  // Forward on a private tape with parameters as constants; returns logits.
  Tensor predict(const Tensor& batch, ForwardTrace* trace = nullptr) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  ParamAudit audit() const;

  // Redraw every weight with the build-time scheme, zero biases and redraw
  // alphas uniformly from [0, 1).
  void reinitialize(Rng& rng);

  bool is_cnn() const { return cnn_; }
  const ActivationSpec& activation() const { return activation_; }
  const std::vector<ActivatedLayer>& activated_layers() const { return activated_; }
  const AlphaStore* alphas() const { return alphas_.get(); }
  AlphaStore* alphas() { return alphas_.get(); }
  std::vector<WeightMatrix> weight_matrices() const;
  std::size_t output_dim() const { return output_dim_; }

 private:
  enum class StepKind { dense, conv, pool, flatten, activation, output_alpha };
  struct Step {
    StepKind kind;
    std::size_t param = 0;    // index of weight; bias follows it
    std::size_t layer = 0;    // activated-layer index for activation steps
  };

  Model() = default;
  Var forward_impl(Tape& tape, const Tensor& batch, ForwardTrace* trace, bool bind_params) const;
  Parameter& add_param(std::string name, Shape shape, ParamRole role);
  void init_weights(Rng& rng);
  void init_alphas(Rng& rng);

  bool cnn_ = false;
  std::size_t output_dim_ = 0;
  ActivationSpec activation_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<Step> steps_;
  std::vector<ActivatedLayer> activated_;
  std::unique_ptr<AlphaStore> alphas_;
  std::unique_ptr<Parameter> output_alpha_;
  std::vector<std::size_t> fan_in_;  // per entry of params_, 0 for non-weights
};

}  // namespace plasticity
