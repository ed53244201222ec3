#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdh/asm_model.hpp"
#include "mdh/highlevel.hpp"
#include "mdh/rng.hpp"

namespace mdh {

// One point of the tuning space. MDH levels are (layer, dim) with
// layer in 1..L (L = ASM layer count) and dim in 1..D; maps indexed "per
// level" run over the lexicographic level order (layer-major), see
// level_rank. Region ids are 1-based memory-layer ids of the ASM.
struct TuningConfig {
  std::vector<std::vector<int64_t>> num_parts; // [layer-1][dim-1] = #PRT(l,d)

  std::vector<MdhLevel> ord_de, ord_scalar, ord_re; // nest order, outermost first

  std::vector<AsmLevel> ass_de, ass_scalar, ass_re; // [level_rank] -> ASM level

  std::vector<std::vector<int>> mem_de;                 // [input buffer][level_rank] -> region
  std::vector<std::vector<std::vector<int>>> layout_de; // [input buffer][level_rank] -> perm of 1..D_b
  std::vector<int> mem_scalar_in, mem_scalar_out;       // [buffer] -> region
  std::vector<std::vector<int>> layout_scalar_in, layout_scalar_out;
  std::vector<std::vector<int>> mem_re;                 // [output buffer][level_rank] -> region
  std::vector<std::vector<std::vector<int>>> layout_re;

  int64_t c_dev = 1024; // device constant for the OpenCL capacity rule

  int layer_count() const { return static_cast<int>(num_parts.size()); }
  int dim_count() const { return num_parts.empty() ? 0 : static_cast<int>(num_parts[0].size()); }
  int level_count() const { return layer_count() * dim_count(); }
  int64_t parts(const MdhLevel& l) const {
    return num_parts[static_cast<size_t>(l.layer - 1)][static_cast<size_t>(l.dim - 1)];
  }
};

// Named rule set applied on top of the structural rules. Auto-selection
// matches the model's preset name; anything unknown gets no extra rules.
struct ModelConstraintSet {
  std::string name = "None"; // None | CUDA | CUDA+WRP | OpenCL

  static ModelConstraintSet none() { return {}; }
  static ModelConstraintSet for_model(const AsmModel& m);
};

// Structural rules ("full partitioning", "order bijection", "assignment
// bijection", "region range", "layout permutation", "structure") plus the
// selected model rules ("Number of CCs limited", "SMXs combine in DM",
// "CCs combine in DM/SM", "WRPs combine in DM/SM", "Number of PEs limited",
// "CUs combine in GM", "PEs combine in GM/LM"). Violations carry the rule id
// in their code field.
ValidationReport validate(const TuningConfig& config, const HighLevelExpr& expr, const AsmModel& model,
                          const ModelConstraintSet& constraints);

// Uniform random point: ordered factorizations of each N_d into L factors
// sampled uniformly, orders/assignments as uniform permutations, regions and
// layouts uniform. Resamples until validate accepts.
// Throws NoValidConfigFound after 10,000 attempts.
TuningConfig sample(const HighLevelExpr& expr, const AsmModel& model, const ModelConstraintSet& constraints,
                    uint64_t rng_seed);

// Published MatMul configurations, bundled as data files.
struct Fixture {
  std::string name;
  std::string spec_name;     // bundled computation the config targets
  AsmModel model;
  std::vector<int64_t> sizes; // (i, j, k) = 16, 1000, 2048
  TuningConfig config;
};
Fixture fixture(const std::string& name); // UnknownFixture

// Reduced search space: one shared phase order, assignments restricted to
// the blocked/strided pair, region maps invariant in the dimension
// component, one layout per buffer.
struct ReducedSpace {
  const HighLevelExpr* expr = nullptr;
  const AsmModel* model = nullptr;
  ModelConstraintSet constraints;

  // Structurally valid by construction; resamples until the model rules
  // accept (NoValidConfigFound after 10,000 attempts).
  TuningConfig sample(Rng& rng) const;
  double log2_cardinality() const;
};

ReducedSpace reduce_space(const HighLevelExpr& expr, const AsmModel& model);
double full_space_log2_cardinality(const HighLevelExpr& expr, const AsmModel& model);

// Ordered factorizations of n into exactly k factors ≥ 1.
int64_t ordered_factorization_count(int64_t n, int k);
std::vector<int64_t> sample_ordered_factorization(int64_t n, int k, Rng& rng);

// All-on-layer-1 configuration: layer 1 holds every part, lexicographic
// orders, identity assignments, region 1 everywhere, identity layouts.
TuningConfig baseline_config(const HighLevelExpr& expr, const AsmModel& model);

} // namespace mdh
