#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "liwuda/nn.hpp"

namespace liwuda::nn {

// Checkpoint text format, version 1. Lines are '\n'-terminated and tokens are
// separated by a single space; reals use 17 significant digits ("%.17g").
//
//   liwuda-checkpoint 1
//   network feature|classifier|weight
//   layers <count>
//   layer <in> <out> <relu|sigmoid|identity>
//   <in lines of `out` weights, row-major>
//   <one line of `out` biases>
//   ... (remaining layers, then the next network)
//   end
//
// Networks appear in the order feature, classifier, weight.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace liwuda::nn
