#pragma once

#include <string>
#include <vector>

#include "mdh/asm_model.hpp"
#include "mdh/highlevel.hpp"
#include "mdh/tuning.hpp"

namespace mdh {

// Uniform partitioning of [0, N) into layered part counts for one dimension.
struct PartitionScheme {
  int64_t N = 1;
  std::vector<int64_t> counts; // P^1..P^L, outer to inner

  // Extent of one part after the first `levels` splits: N / Π_{l<=levels} P^l.
  int64_t stride(int levels) const;
  // Range of the part addressed by indices p^1..p^k (k may be < L, giving
  // the coarser block). [OS, OS + stride(k)).
  IndexRange range(const std::vector<int64_t>& p) const;
};

// [OS, OS+PS) per the offset formula; NonDivisible when the counts do not
// divide N_d.
IndexRange partition_range(int64_t N_d, const std::vector<int64_t>& counts, const std::vector<int64_t>& p);

// Region and ASM-layer annotations are carried by name so the printed form
// and the parsed form coincide; ids are recovered through the model.
struct BufferStaging {
  std::string buffer;
  std::string region;
  std::vector<int> layout;
};

struct StepTag {
  std::string layer;
  int dim = 1;
};

// One printed step of a phase. De-composition phases start with an untagged
// input-view stage and re-composition phases end with an untagged
// output-view stage; the tagged steps in between cover every MDH level once.
struct PhaseStep {
  bool view_stage = false;
  MdhLevel level{};
  StepTag tag{};
  CombineOpSpec op;            // tagged re steps: the dimension's combine op
  bool inverse = false;        // tagged de steps split via inverse concatenation
  std::vector<BufferStaging> staging;
};

struct ScalarStep {
  std::vector<MdhLevel> order;  // ord_scalar, outermost first
  std::vector<StepTag> ass;     // by lexicographic level rank
  std::vector<BufferStaging> in_staging;
  std::vector<BufferStaging> out_staging;
};

struct LowLevelExpr {
  std::string computation;
  AsmModel model;
  TuningConfig config;
  std::vector<PhaseStep> de_steps; // input-view stage + L*D tagged steps in ord_de order
  ScalarStep scalar_step;
  std::vector<PhaseStep> re_steps; // L*D tagged steps in ord_re order + output-view stage

  std::string pretty() const;
};

// Checks validate_md_hom and the structural tuning rules once more
// (InvalidConfig on failure), then assembles the three phases with the
// config's regions and layouts carried verbatim onto the steps.
LowLevelExpr lower(const HighLevelExpr& expr, const AsmModel& model, const TuningConfig& config);

// Inverse of pretty(): rebuilds the printable structure (steps, levels,
// tags, ops, staging) from text. Model/config fields other than those are
// not recoverable from text and stay default. pretty() of the result equals
// the input text exactly.
LowLevelExpr parse_lowlevel_pretty(const std::string& text);

} // namespace mdh
