#pragma once

#include <optional>

#include "plasticity/activations/activation.hpp"
#include "plasticity/grad/tape.hpp"

namespace plasticity {

/// Applies an activation to pre-activations of shape (B x C) or
/// (B x C x H x W). Axis 1 is the unit axis; alpha, when the spec needs one,
/// holds either one value per unit or a single shared value.
///
/// CReLU and Fourier return (B x 2C ...) with the second output of every
/// unit stored in the upper half of axis 1.
Var activate(Var pre, const ActivationSpec& spec, std::optional<Var> alpha = std::nullopt);

}  // namespace plasticity
