#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "plasticity/activations/activation.hpp"
#include "plasticity/grad/parameter.hpp"
#include "plasticity/rng.hpp"

namespace plasticity {

/// Where each activated unit's alpha lives, for a stack of activated layers.
/// A "unit" is a neuron for dense layers and an output channel for
/// convolutions (alpha is shared over spatial positions).
class AlphaLayout {
 public:
  AlphaLayout() = default;
  AlphaLayout(Granularity granularity, std::vector<std::size_t> units_per_layer);

  Granularity granularity() const { return granularity_; }
  std::size_t layers() const { return units_.size(); }
  std::size_t units(std::size_t layer) const { return units_.at(layer); }
  // neuron: sum of units; layer: number of layers; network: 1.
  std::size_t count() const;
  // Number of alpha values the layer's activation reads (units or 1).
  std::size_t layer_width(std::size_t layer) const;
  // Flat index of the alpha used by (layer, unit). Throws std::out_of_range.
  std::size_t resolve(std::size_t layer, std::size_t unit) const;

 private:
  Granularity granularity_ = Granularity::neuron;
  std::vector<std::size_t> units_;
};

/// Owns the alpha Parameters for an AlphaLayout. Network granularity shares
/// a single Parameter between every layer.
class AlphaStore {
 public:
  AlphaStore(Granularity granularity, std::vector<std::size_t> units_per_layer,
             const std::string& name_prefix = "alpha");

  const AlphaLayout& layout() const { return layout_; }
  std::size_t count() const { return layout_.count(); }

  Parameter& layer_param(std::size_t layer);
  const Parameter& layer_param(std::size_t layer) const;
  float& resolve(std::size_t layer, std::size_t unit);
  float resolve(std::size_t layer, std::size_t unit) const;

  // Distinct parameters, in layer order.
  std::vector<Parameter*> parameters();

  // Every alpha drawn uniformly from [lo, hi).
  void initialize(Rng& rng, double lo = 0.0, double hi = 1.0);

 private:
  AlphaLayout layout_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<Parameter*> per_layer_;
};

}  // namespace plasticity
