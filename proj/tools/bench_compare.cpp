#include <chrono>
#include <iostream>
#include <memory>

#include "mdh/autotuner.hpp"
#include "mdh/codegen.hpp"
#include "mdh/error.hpp"
#include "mdh/highlevel.hpp"
#include "mdh/interpreter.hpp"
#include "mdh/json_io.hpp"
#include "mdh/lowering.hpp"
#include "mdh/tuning.hpp"

// Times the reference interpreter against the emitted OpenMP kernel on
// MatVec 512x4096. The kernel is built with the host C compiler; without
// one the comparison is skipped and only the interpreter is timed.

using namespace mdh;

int main() {
  HighLevelExpr expr = bundled_computation("matvec");
  expr.sizes = {512, 4096};
  AsmModel model = preset("OpenMP");

  TuningConfig config = baseline_config(expr, model);
  config.num_parts = {{1, 1}, {8, 8}, {8, 64}, {8, 8}};
  // The core-tagged row level leads the nest so the kernel opens exactly one
  // parallel region.
  std::vector<MdhLevel> ord = {{4, 1}, {1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 1}, {3, 2}, {4, 2}};
  config.ord_de = config.ord_scalar = config.ord_re = ord;
  ValidationReport rep = validate(config, expr, model, ModelConstraintSet::for_model(model));
  if (!rep.ok) {
    std::cerr << "benchmark configuration is invalid: " << rep.violations.front().message << "\n";
    return 1;
  }

  std::vector<std::shared_ptr<Buffer>> inputs;
  {
    std::vector<std::vector<int64_t>> dims = infer_buffer_sizes(expr.input_view, expr.full_ranges());
    Rng rng(7);
    for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
      auto buf = std::make_shared<Buffer>(Buffer::make(dims[b], ScalarType::Int64));
      for (int64_t t = 0; t < buf->flat_size(); ++t) {
        buf->data[static_cast<size_t>(t)].i = static_cast<int64_t>(rng.below(19)) - 9;
        buf->defined[static_cast<size_t>(t)] = 1;
      }
      inputs.push_back(std::move(buf));
    }
  }

  std::cout << "matvec " << expr.sizes[0] << "x" << expr.sizes[1] << " (i64)\n";

  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::shared_ptr<Buffer>> want = reference_execute(expr, inputs);
  auto t1 = std::chrono::steady_clock::now();
  double ref_s = std::chrono::duration<double>(t1 - t0).count();
  std::cout << "reference interpreter: " << ref_s << " s\n";

  LowLevelExpr ll = lower(expr, model, config);
  std::string source = emit(ll, expr);
  try {
    VerifyInfo info = verify_emitted(source, expr, inputs, want);
    double kern_s = compiled_time_objective(expr, model, config);
    std::cout << "emitted kernel (" << info.compiler << (info.openmp ? ", OpenMP" : "") << "): " << kern_s
              << " s [verified]\n";
    if (kern_s > 0) std::cout << "speedup: " << ref_s / kern_s << "x\n";
  } catch (const Error& e) {
    if (e.code != "CompilerUnavailable") throw;
    std::cout << "emitted kernel: skipped (no C compiler available)\n";
  }
  return 0;
}
