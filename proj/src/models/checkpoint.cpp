#include "plasticity/models/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace {

constexpr const char* kMagic = "plasticity-checkpoint 1";

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string shape_token(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out.empty() ? "1" : out;
}

}  // namespace

std::string checkpoint_descriptor(const Model& model) {
  std::string line = kMagic;
  for (const Parameter* p : model.parameters()) {
    line += ' ';
    line += p->name;
    line += ':';
    line += to_string(p->role);
    line += ':';
    line += shape_token(p->value.shape());
  }
  return line;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_descriptor(model) << '\n';
  for (const Parameter* p : model.parameters()) {
    for (float v : p->value.values()) {
      const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

void load_checkpoint(Model& model, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != checkpoint_descriptor(model)) {
    throw FormatError("checkpoint " + path.string() + " does not match the model's parameters");
  }
  std::vector<Parameter*> params = model.parameters();
  std::size_t expected = 0;
  for (const Parameter* p : params) expected += p->value.size();
  std::vector<std::uint32_t> raw(expected);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(in.gcount()) != raw.size() * sizeof(std::uint32_t)) {
    throw FormatError("checkpoint " + path.string() + " is truncated");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint " + path.string() + " has trailing data");
  std::size_t k = 0;
  for (Parameter* p : params) {
    for (float& v : p->value.values()) v = std::bit_cast<float>(to_little(raw[k++]));
  }
}

}  // namespace plasticity
