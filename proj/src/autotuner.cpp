#include "mdh/autotuner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "mdh/codegen.hpp"
#include "mdh/error.hpp"
#include "mdh/interpreter.hpp"
#include "mdh/json_io.hpp"
#include "mdh/lowering.hpp"

namespace mdh {

namespace {

std::vector<int64_t> distinct_primes(int64_t n) {
  std::vector<int64_t> ps;
  for (int64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      ps.push_back(p);
      while (n % p == 0) n /= p;
    }
  if (n > 1) ps.push_back(n);
  return ps;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

uint64_t config_hash(const TuningConfig& config, const HighLevelExpr& expr, const AsmModel& model) {
  std::string s = config_to_json(config, expr, model);
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string history_csv(const TuneResult& r) {
  std::ostringstream ss;
  ss << "eval_index,config_hash,objective,valid\n";
  for (const TuneEvent& ev : r.history)
    ss << ev.eval_index << "," << ev.config_hash << "," << fmt_double(ev.objective) << ","
       << (ev.valid ? 1 : 0) << "\n";
  return ss.str();
}

double simcost_objective(const HighLevelExpr& expr, const AsmModel& model, const TuningConfig& config) {
  LowLevelExpr ll = lower(expr, model, config);
  ExecTrace trace = simulate_trace(ll, expr);
  return cost(trace, model, default_sim_weights(model), 1.0);
}

double compiled_time_objective(const HighLevelExpr& expr, const AsmModel& model, const TuningConfig& config) {
  LowLevelExpr ll = lower(expr, model, config);
  std::string kernel = emit(ll, expr);

  std::vector<std::vector<int64_t>> in_dims = infer_buffer_sizes(expr.input_view, expr.full_ranges());
  std::vector<std::vector<int64_t>> out_dims =
      infer_buffer_sizes(expr.output_view, collapsed_ranges(expr));

  std::ostringstream prog;
  prog << kernel << "\n#include <stdio.h>\n#include <time.h>\n";
  auto flat = [](const std::vector<int64_t>& dims) {
    int64_t sz = 1;
    for (int64_t d : dims) sz *= d;
    return std::max<int64_t>(1, sz);
  };
  for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
    const ViewBuffer& vb = expr.input_view.buffers[b];
    prog << "static " << (vb.type == ScalarType::Int64 ? "long long" : "double") << " " << vb.name
         << "_data[" << flat(in_dims[b]) << "];\n";
  }
  for (size_t b = 0; b < expr.output_view.buffers.size(); ++b) {
    const ViewBuffer& vb = expr.output_view.buffers[b];
    prog << "static " << (vb.type == ScalarType::Int64 ? "long long" : "double") << " " << vb.name
         << "_out[" << flat(out_dims[b]) << "];\n";
  }
  prog << "int main(void) {\n";
  for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
    const ViewBuffer& vb = expr.input_view.buffers[b];
    prog << "  for (long long t = 0; t < " << flat(in_dims[b]) << "; ++t) " << vb.name
         << "_data[t] = " << (vb.type == ScalarType::Int64 ? "t % 7 + 1" : "(double)(t % 7 + 1)")
         << ";\n";
  }
  std::string call = "mdh_kernel(";
  {
    bool first = true;
    for (const ViewBuffer& vb : expr.input_view.buffers) {
      if (!first) call += ", ";
      first = false;
      call += vb.name + "_data";
    }
    for (const ViewBuffer& vb : expr.output_view.buffers) {
      if (!first) call += ", ";
      first = false;
      call += vb.name + "_out";
    }
  }
  call += ");";
  prog << "  " << call << "\n"; // warmup
  prog << "  for (int r = 0; r < 5; ++r) {\n"
       << "    struct timespec t0, t1;\n"
       << "    clock_gettime(CLOCK_MONOTONIC, &t0);\n"
       << "    " << call << "\n"
       << "    clock_gettime(CLOCK_MONOTONIC, &t1);\n"
       << "    printf(\"%.9f\\n\", (double)(t1.tv_sec - t0.tv_sec) + 1e-9 * (double)(t1.tv_nsec - "
          "t0.tv_nsec));\n"
       << "  }\n  return 0;\n}\n";

  std::istringstream out(compile_and_run(prog.str()));
  std::vector<double> runs;
  std::string line;
  while (std::getline(out, line))
    if (!line.empty()) runs.push_back(std::strtod(line.c_str(), nullptr));
  if (runs.size() != 5) fail("Mismatch", "timing program printed " + std::to_string(runs.size()) + " runs");
  std::sort(runs.begin(), runs.end());
  return runs[2];
}

NeighborhoodFn default_neighborhood(const HighLevelExpr& expr, const AsmModel& model,
                                    const ModelConstraintSet& constraints) {
  return [expr, model, constraints](const TuningConfig& c) {
    std::vector<TuningConfig> out;
    auto admit = [&](TuningConfig&& cand) {
      if (validate(cand, expr, model, constraints).ok) out.push_back(std::move(cand));
    };

    const int L = c.layer_count();
    const int D = c.dim_count();
    for (int l = 0; l + 1 < L; ++l)
      for (int d = 0; d < D; ++d) {
        for (int64_t p : distinct_primes(c.num_parts[static_cast<size_t>(l)][static_cast<size_t>(d)])) {
          TuningConfig cand = c;
          cand.num_parts[static_cast<size_t>(l)][static_cast<size_t>(d)] /= p;
          cand.num_parts[static_cast<size_t>(l + 1)][static_cast<size_t>(d)] *= p;
          admit(std::move(cand));
        }
        for (int64_t p : distinct_primes(c.num_parts[static_cast<size_t>(l + 1)][static_cast<size_t>(d)])) {
          TuningConfig cand = c;
          cand.num_parts[static_cast<size_t>(l + 1)][static_cast<size_t>(d)] /= p;
          cand.num_parts[static_cast<size_t>(l)][static_cast<size_t>(d)] *= p;
          admit(std::move(cand));
        }
      }

    auto order_moves = [&](std::vector<MdhLevel> TuningConfig::* field) {
      const std::vector<MdhLevel>& ord = c.*field;
      for (size_t k = 0; k + 1 < ord.size(); ++k) {
        TuningConfig cand = c;
        std::swap((cand.*field)[k], (cand.*field)[k + 1]);
        admit(std::move(cand));
      }
    };
    order_moves(&TuningConfig::ord_de);
    order_moves(&TuningConfig::ord_scalar);
    order_moves(&TuningConfig::ord_re);

    auto ass_moves = [&](std::vector<AsmLevel> TuningConfig::* field) {
      const std::vector<AsmLevel>& ass = c.*field;
      for (size_t a = 0; a < ass.size(); ++a)
        for (size_t b = a + 1; b < ass.size(); ++b) {
          TuningConfig cand = c;
          std::swap((cand.*field)[a], (cand.*field)[b]);
          admit(std::move(cand));
        }
    };
    ass_moves(&TuningConfig::ass_de);
    ass_moves(&TuningConfig::ass_scalar);
    ass_moves(&TuningConfig::ass_re);

    const int regions = model.region_count();
    auto mem_phase_moves = [&](std::vector<std::vector<int>> TuningConfig::* field) {
      const std::vector<std::vector<int>>& mem = c.*field;
      for (size_t b = 0; b < mem.size(); ++b)
        for (size_t r = 0; r < mem[b].size(); ++r)
          for (int reg = 1; reg <= regions; ++reg) {
            if (reg == mem[b][r]) continue;
            TuningConfig cand = c;
            (cand.*field)[b][r] = reg;
            admit(std::move(cand));
          }
    };
    mem_phase_moves(&TuningConfig::mem_de);
    mem_phase_moves(&TuningConfig::mem_re);

    auto mem_scalar_moves = [&](std::vector<int> TuningConfig::* field) {
      const std::vector<int>& mem = c.*field;
      for (size_t b = 0; b < mem.size(); ++b)
        for (int reg = 1; reg <= regions; ++reg) {
          if (reg == mem[b]) continue;
          TuningConfig cand = c;
          (cand.*field)[b] = reg;
          admit(std::move(cand));
        }
    };
    mem_scalar_moves(&TuningConfig::mem_scalar_in);
    mem_scalar_moves(&TuningConfig::mem_scalar_out);

    return out;
  };
}

ClimbResult hill_climb(const TuningConfig& start, double start_objective, const NeighborhoodFn& neighborhood,
                       const EvaluateFn& evaluate, int steps, Rng& rng) {
  ClimbResult r;
  r.best = start;
  r.best_objective = start_objective;
  if (steps <= 0) return r;
  while (true) {
    std::vector<TuningConfig> nbrs = neighborhood(r.best);
    std::vector<size_t> order(nbrs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    bool improved = false;
    for (size_t k : order) {
      if (r.evaluations >= steps) return r;
      std::optional<double> obj = evaluate(nbrs[k]);
      if (!obj) return r;
      ++r.evaluations;
      if (*obj < r.best_objective) {
        r.best = nbrs[k];
        r.best_objective = *obj;
        improved = true;
        break;
      }
    }
    if (!improved) {
      r.converged = true;
      return r;
    }
  }
}

TuneResult tune(const HighLevelExpr& expr, const AsmModel& model, const ModelConstraintSet& constraints,
                int budget, Objective objective, uint64_t seed) {
  if (budget < 1) fail("InvalidConfig", "tuning budget must be at least 1, got " + std::to_string(budget));

  Rng rng(seed);
  ReducedSpace space = reduce_space(expr, model);
  space.constraints = constraints;

  TuneResult result;
  int spent = 0;
  std::optional<double> best_obj;
  uint64_t best_hash = 0;

  auto evaluate = [&](const TuningConfig& cfg) -> std::optional<double> {
    if (spent >= budget) return std::nullopt;
    TuneEvent ev;
    ev.eval_index = spent;
    ev.config_hash = config_hash(cfg, expr, model);
    double obj = std::numeric_limits<double>::infinity();
    ev.valid = true;
    try {
      obj = objective == Objective::SimCost ? simcost_objective(expr, model, cfg)
                                            : compiled_time_objective(expr, model, cfg);
    } catch (const Error& err) {
      if (err.code == "CompilerUnavailable") throw;
      ev.valid = false;
    }
    ev.objective = obj;
    result.history.push_back(ev);
    ++spent;
    if (ev.valid &&
        (!best_obj || obj < *best_obj || (obj == *best_obj && ev.config_hash < best_hash))) {
      best_obj = obj;
      best_hash = ev.config_hash;
      result.best = cfg;
    }
    return obj;
  };

  int n_random = std::max(1, budget * 3 / 10);
  n_random = std::min(n_random, budget);
  for (int i = 0; i < n_random; ++i) evaluate(space.sample(rng));

  NeighborhoodFn neighborhood = default_neighborhood(expr, model, constraints);
  uint64_t settled_hash = 0;
  bool settled = false; // a climb from the current best has converged
  while (spent < budget) {
    if (best_obj && !(settled && settled_hash == best_hash)) {
      ClimbResult cr = hill_climb(result.best, *best_obj, neighborhood, evaluate, budget - spent, rng);
      if (!cr.converged) break; // budget ran out mid-scan
      settled = true;
      settled_hash = best_hash;
    } else {
      evaluate(space.sample(rng));
    }
  }

  if (!best_obj) fail("NoValidConfigFound", "every evaluated configuration failed");
  result.best_objective = *best_obj;
  return result;
}

} // namespace mdh
