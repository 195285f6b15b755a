#include "plasticity/activations/alpha_store.hpp"

#include <numeric>
#include <stdexcept>

namespace plasticity {

AlphaLayout::AlphaLayout(Granularity granularity, std::vector<std::size_t> units_per_layer)
    : granularity_(granularity), units_(std::move(units_per_layer)) {}

std::size_t AlphaLayout::count() const {
  switch (granularity_) {
    case Granularity::neuron: return std::accumulate(units_.begin(), units_.end(), std::size_t{0});
    case Granularity::layer: return units_.size();
    case Granularity::network: return units_.empty() ? 0 : 1;
  }
  return 0;
}

std::size_t AlphaLayout::layer_width(std::size_t layer) const {
  return granularity_ == Granularity::neuron ? units_.at(layer) : 1;
}

std::size_t AlphaLayout::resolve(std::size_t layer, std::size_t unit) const {
  if (layer >= units_.size() || unit >= units_[layer]) {
    throw std::out_of_range("alpha index (" + std::to_string(layer) + ", " + std::to_string(unit) +
                            ") outside the architecture");
  }
  switch (granularity_) {
    case Granularity::neuron:
      return std::accumulate(units_.begin(), units_.begin() + layer, std::size_t{0}) + unit;
    case Granularity::layer: return layer;
    case Granularity::network: return 0;
  }
  return 0;
}

AlphaStore::AlphaStore(Granularity granularity, std::vector<std::size_t> units_per_layer,
                       const std::string& name_prefix)
    : layout_(granularity, std::move(units_per_layer)) {
  for (std::size_t l = 0; l < layout_.layers(); ++l) {
    if (granularity == Granularity::network && l > 0) {
      per_layer_.push_back(per_layer_.front());
      continue;
    }
    const std::string name =
        granularity == Granularity::network ? name_prefix : name_prefix + std::to_string(l);
    params_.push_back(std::make_unique<Parameter>(name, Tensor({layout_.layer_width(l)}), ParamRole::alpha));
    per_layer_.push_back(params_.back().get());
  }
}

Parameter& AlphaStore::layer_param(std::size_t layer) { return *per_layer_.at(layer); }
const Parameter& AlphaStore::layer_param(std::size_t layer) const { return *per_layer_.at(layer); }

float& AlphaStore::resolve(std::size_t layer, std::size_t unit) {
  layout_.resolve(layer, unit);
  Parameter& p = layer_param(layer);
  return p.value[p.value.size() == 1 ? 0 : unit];
}

float AlphaStore::resolve(std::size_t layer, std::size_t unit) const {
  layout_.resolve(layer, unit);
  const Parameter& p = layer_param(layer);
  return p.value[p.value.size() == 1 ? 0 : unit];
}

std::vector<Parameter*> AlphaStore::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

void AlphaStore::initialize(Rng& rng, double lo, double hi) {
  for (auto& p : params_) {
    for (float& v : p->value.values()) v = static_cast<float>(rng.uniform(lo, hi));
  }
}

}  // namespace plasticity
