#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdh/asm_model.hpp"
#include "mdh/highlevel.hpp"
#include "mdh/rng.hpp"
#include "mdh/tuning.hpp"

namespace mdh {

enum class Objective { SimCost, CompiledTime };

struct TuneEvent {
  int eval_index = 0;       // 0-based position in the evaluation sequence
  uint64_t config_hash = 0; // FNV-1a over the canonical config JSON
  double objective = 0.0;   // +inf when the evaluation failed
  bool valid = true;
};

struct TuneResult {
  TuningConfig best;
  double best_objective = 0.0;
  std::vector<TuneEvent> history; // exactly `budget` rows
};

// "eval_index,config_hash,objective,valid" header plus one row per event.
std::string history_csv(const TuneResult& r);

// Random sampling over the reduced space for 3/10 of the budget (at least
// one evaluation), then first-improving hill climbing from the incumbent;
// budget left after convergence goes back to random sampling, re-climbing
// whenever a sample takes the lead. Deterministic for a fixed seed.
// InvalidConfig when budget < 1; NoValidConfigFound when every evaluation
// failed.
TuneResult tune(const HighLevelExpr& expr, const AsmModel& model, const ModelConstraintSet& constraints,
                int budget, Objective objective, uint64_t seed);

using NeighborhoodFn = std::function<std::vector<TuningConfig>(const TuningConfig&)>;
using EvaluateFn = std::function<std::optional<double>(const TuningConfig&)>;

struct ClimbResult {
  TuningConfig best;
  double best_objective = 0.0;
  int evaluations = 0;
  bool converged = false; // a full neighborhood scan found no improvement
};

// First-improving local search. Each round scans the whole neighborhood of
// the incumbent in a seeded-shuffle order and moves at the first strict
// improvement; stops when a full scan yields none, when `steps` evaluations
// are spent, or when `evaluate` reports exhaustion (nullopt).
ClimbResult hill_climb(const TuningConfig& start, double start_objective, const NeighborhoodFn& neighborhood,
                       const EvaluateFn& evaluate, int steps, Rng& rng);

// Neighbors of a configuration: one prime factor moved between adjacent
// layers (both directions, per dimension), adjacent transpositions of each
// phase order, image swaps of each assignment, and single region changes in
// the de/scalar/re memory maps. Candidates failing validation are dropped.
NeighborhoodFn default_neighborhood(const HighLevelExpr& expr, const AsmModel& model,
                                    const ModelConstraintSet& constraints);

// Weighted data-movement cost of the lowered expression; input-free.
double simcost_objective(const HighLevelExpr& expr, const AsmModel& model, const TuningConfig& config);

// Emits the kernel, builds it with the host C compiler, and times it on
// synthetic inputs: one warmup, five timed runs, median seconds returned.
// CompilerUnavailable propagates so callers can gate on the environment.
double compiled_time_objective(const HighLevelExpr& expr, const AsmModel& model, const TuningConfig& config);

// FNV-1a 64 over the canonical JSON serialization; the tie-breaker and the
// identity of a configuration in tuning history.
uint64_t config_hash(const TuningConfig& config, const HighLevelExpr& expr, const AsmModel& model);

} // namespace mdh
