#pragma once

#include <filesystem>
#include <string>

#include "plasticity/models/model.hpp"

namespace plasticity {

// One text line "plasticity-checkpoint 1 name:role:d0xd1... ..." followed by
// every parameter's values as little-endian float32, in parameters() order.
std::string checkpoint_descriptor(const Model& model);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
// Throws FormatError when the file does not describe this model's parameters.
void load_checkpoint(Model& model, const std::filesystem::path& path);

}  // namespace plasticity
