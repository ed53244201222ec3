#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mdh/lowering.hpp"

namespace mdh {

struct CodegenOptions {
  bool fuse = true;                 // single nest when orders and assignments coincide
  bool eliminate_buffers = true;    // skip staging copies whose region and layout repeat
  bool reduce_sizes = true;         // rebase staged inputs onto their reachable lattice
  bool constant_substitution = true; // one-part levels become const indices, not loops
};

// What the optimizing emitter would do with this lowered expression.
struct OptimizeReport {
  int fusible_prefix = 0;  // longest shared prefix of the three phase orders (with equal tags)
  bool fully_fused = false;
  int elided_copies = 0;   // staging transitions dropped because region and layout repeat
  std::vector<std::vector<int64_t>> reduced_input_sizes; // per input buffer
  int constant_levels = 0; // levels with a single part
};

OptimizeReport optimize(const LowLevelExpr& ll, const HighLevelExpr& expr);

// Emits a self-contained C kernel `void mdh_kernel(const T* in..., T* out...)`
// over flat row-major buffers. Core-tagged part loops carry OpenMP pragmas;
// the file compiles and runs unchanged without OpenMP.
std::string emit(const LowLevelExpr& ll, const HighLevelExpr& expr, const CodegenOptions& options = {});

struct VerifyInfo {
  std::string compiler;
  bool openmp = false;
};

// Builds a complete C program with the first working host compiler (CC, cc,
// gcc, clang; -fopenmp and -ffp-contract=off when accepted), runs it, and
// returns its stdout. CompilerUnavailable when nothing builds, Mismatch when
// the program exits nonzero.
std::string compile_and_run(const std::string& program, VerifyInfo* info = nullptr);

// Appends a main() that feeds `inputs` and prints every output cell, builds
// the program with the first working C compiler (CC, cc, gcc, clang; -fopenmp
// when accepted), runs it, and compares against `expected` (Int64 exact,
// Float64 within rel_tol; undefined expected cells are skipped).
// CompilerUnavailable when no compiler works, Mismatch when values differ.
VerifyInfo verify_emitted(const std::string& source, const HighLevelExpr& expr,
                          const std::vector<std::shared_ptr<Buffer>>& inputs,
                          const std::vector<std::shared_ptr<Buffer>>& expected,
                          double rel_tol = 1e-6);

} // namespace mdh
