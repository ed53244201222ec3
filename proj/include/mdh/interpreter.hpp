#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mdh/lowering.hpp"

namespace mdh {

// Data movement of one lowered step. Reads and writes are whole-footprint
// element counts; the region map attributes both to the memory regions they
// touch. `parallel` is the step's sequential fan-out: the level's part count
// when its ASM tag is a memory layer (parts run one after another), 1 when
// the tag is a core layer (parts run side by side).
struct TraceStep {
  std::string label;
  int64_t elements_read = 0;
  int64_t elements_written = 0;
  std::map<int, int64_t> region_traffic; // region id -> elements moved
  int64_t parallel = 1;
};

struct ExecTrace {
  std::string computation;
  std::vector<TraceStep> steps;
  int64_t total_read = 0;
  int64_t total_written = 0;
  std::map<int, int64_t> region_traffic;
  // Sum of the per-phase products of step fan-outs; the view stages count 1
  // each. All parts memory-tagged makes this the full sequential step count.
  int64_t parallel_depth = 0;

  std::string to_json(const AsmModel& model) const;
};

// Executes the lowered expression single-threaded and deterministically:
// the loop nest follows ord_re with the uniform-partitioning strides, so
// leaves are visited exactly in re-composition order. Returns the output
// buffers and the movement trace of the de / scalar / re phases.
std::pair<std::vector<std::shared_ptr<Buffer>>, ExecTrace> interpret(
    const LowLevelExpr& ll, const HighLevelExpr& expr,
    const std::vector<std::shared_ptr<Buffer>>& inputs);

// The movement trace alone. Traffic is a function of the lowered structure
// and the sizes, never of buffer contents, so no inputs are needed.
ExecTrace simulate_trace(const LowLevelExpr& ll, const HighLevelExpr& expr);

// weight(region) = 2^(M - r + 1): slower outer memories cost more per element.
std::map<int, double> default_sim_weights(const AsmModel& model);

// Weighted traffic plus alpha * parallel_depth. MissingWeight when a region
// with traffic has no weight.
double cost(const ExecTrace& trace, const AsmModel& model, const std::map<int, double>& weights,
            double alpha = 1.0);

} // namespace mdh
