#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "agit/generator.hpp"
#include "agit/metrics.hpp"
#include "agit/tensor.hpp"

namespace agit {

// Translates every input with gen (inference mode) and scores the result in
// 8-bit space. With a reference batch the comparison is generated vs
// reference; without one (unpaired test sets) it is generated vs input,
// which measures how much content survives translation. The report's mode
// field records which comparison ran.
MetricReport evaluate_translation(Generator<float>& gen, const Tensor<float>& inputs,
                                  const std::vector<std::string>& names, const Tensor<float>* reference = nullptr);

// Writes one tiled panel strip per input image: input, attention mask
// (linear gray), content mask, fused output, and a cycle reconstruction when
// a reverse generator is supplied. Files are named grid_{index:05}.png and
// the paths are returned in index order.
std::vector<std::filesystem::path> emit_grids(Generator<float>& forward_gen, Generator<float>* reverse_gen,
                                              const Tensor<float>& batch, const std::filesystem::path& out_dir);

// One inference pass through a generator: attention/content heads fused per
// the blending rule, or the raw content head when the generator has no
// attention output.
Tensor<float> translate_batch(Generator<float>& gen, const Tensor<float>& batch);

}  // namespace agit
