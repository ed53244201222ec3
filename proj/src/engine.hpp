#pragma once

#include <memory>
#include <vector>

#include "mdh/highlevel.hpp"

namespace mdh::engine {

// One counted loop of the execution nest. Loops over the same dimension
// compose hierarchically: outer loops step by the combined extent of the
// loops below them, the innermost steps by 1.
struct LoopStep {
  int dim = 1; // 1-based
  int64_t count = 1;
  int64_t stride = 1;
};

struct Plan {
  std::vector<LoopStep> loops;
};

// Canonical ascending nest: one loop per dimension, in dimension order.
Plan lex_plan(const std::vector<int64_t>& sizes);

// Executes the md_hom over the full index space, visiting leaves in the
// plan's nest order (which fixes the Float64 fold order), and returns output
// buffers sized by infer_buffer_sizes over the combined result's ranges.
std::vector<std::shared_ptr<Buffer>> run(const HighLevelExpr& e,
                                         const std::vector<std::shared_ptr<Buffer>>& inputs,
                                         const Plan& plan);

} // namespace mdh::engine
