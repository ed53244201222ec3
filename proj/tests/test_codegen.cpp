#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mdh/codegen.hpp"
#include "mdh/json_io.hpp"
#include "support.hpp"

using namespace mdh;
using namespace mdhtest;

namespace {

size_t count_occurrences(const std::string& hay, const std::string& needle) {
  size_t n = 0;
  for (size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + needle.size()))
    ++n;
  return n;
}

bool compiler_present() {
  static int cached = -1;
  if (cached < 0) {
    try {
      compile_and_run("#include <stdio.h>\nint main(void) { printf(\"ok\\n\"); return 0; }\n");
      cached = 1;
    } catch (const Error& e) {
      cached = e.code == "CompilerUnavailable" ? 0 : 1;
    }
  }
  return cached == 1;
}

} // namespace

TEST_CASE("emitted kernels match their golden files") {
  for (const char* name : {"matvec", "scan", "histo"}) {
    CAPTURE(name);
    HighLevelExpr e = bundled_computation(name);
    AsmModel m = preset("OpenMP");
    std::string stem = std::string("golden/emitted_") + name + "_openmp";
    TuningConfig c = parse_config_json(slurp(data_path(stem + ".config.json")), e, m);
    std::string got = emit(lower(e, m, c), e);
    CHECK(got == slurp(data_path(stem + ".c")));
  }
}

TEST_CASE("lowered matvec matches its golden file") {
  HighLevelExpr e = bundled_computation("matvec");
  e.sizes = {512, 4096};
  AsmModel m = preset("Artificial2+1");
  TuningConfig c = baseline_config(e, m);
  c.num_parts = {{2, 4}, {8, 16}, {32, 64}};
  const int sigma[] = {0, 1, 3, 2}; // MDH layer -> ASM layer
  for (auto* ass : {&c.ass_de, &c.ass_scalar, &c.ass_re})
    for (size_t r = 0; r < ass->size(); ++r) {
      MdhLevel lv = level_from_rank(static_cast<int>(r), 2);
      (*ass)[r] = {sigma[lv.layer], lv.dim};
    }
  c.mem_scalar_in = {2, 2};
  c.mem_scalar_out = {2};
  REQUIRE(validate(c, e, m, ModelConstraintSet::none()).ok);
  std::string text = lower(e, m, c).pretty();
  std::string golden = slurp(data_path("golden/lowered_matvec_512x4096.txt"));
  if (!text.empty() && text.back() != '\n') text += '\n';
  CHECK(text == golden);
}

TEST_CASE("one parallel region per nest") {
  HighLevelExpr e = bundled_computation("matmul");
  AsmModel m = preset("OpenMP");
  for (uint64_t seed : {0ULL, 4ULL, 9ULL}) {
    TuningConfig c = sample(e, m, ModelConstraintSet::none(), seed);
    LowLevelExpr ll = lower(e, m, c);
    std::string src = emit(ll, e);
    bool fused = c.ord_de == c.ord_scalar && c.ord_de == c.ord_re && c.ass_de == c.ass_scalar &&
                 c.ass_de == c.ass_re;
    size_t nests = fused ? 1 : 2;
    CHECK(count_occurrences(src, "#pragma omp parallel for") <= nests);
  }
}

TEST_CASE("emitted source carries the kernel entry and index maps") {
  HighLevelExpr e = bundled_computation("matvec");
  AsmModel m = preset("OpenMP");
  std::string src = emit(lower(e, m, baseline_config(e, m)), e);
  CHECK(src.find("void mdh_kernel(const long long* M, const long long* v, long long* w)") !=
        std::string::npos);
  CHECK(src.find("#define IDX_M_0") != std::string::npos);
  CHECK(src.find("#define IDX_v_0") != std::string::npos);
  CHECK(src.find("#define IDX_w_0") != std::string::npos);
  CHECK(src.find("static inline void mdh_f(") != std::string::npos);
  CHECK(src.find("#ifdef _OPENMP") != std::string::npos);
}

TEST_CASE("float kernels emit double buffers") {
  HighLevelExpr e = bundled_computation("jacobi1d");
  AsmModel m = preset("OpenMP");
  std::string src = emit(lower(e, m, baseline_config(e, m)), e);
  CHECK(src.find("const double* v") != std::string::npos);
  CHECK(src.find("double* w") != std::string::npos);
}

TEST_CASE("optimize reports fusion and constant levels") {
  HighLevelExpr e = bundled_computation("matvec");
  AsmModel m = preset("OpenMP");
  TuningConfig c = baseline_config(e, m);
  LowLevelExpr ll = lower(e, m, c);
  OptimizeReport rep = optimize(ll, e);
  CHECK(rep.fully_fused);
  CHECK(rep.fusible_prefix == m.layer_count() * e.dim_count());
  // Baseline partitions only layer 1, so every other level is constant.
  CHECK(rep.constant_levels == (m.layer_count() - 1) * e.dim_count());

  TuningConfig split = c;
  std::swap(split.ord_re[0], split.ord_re[1]);
  OptimizeReport rep2 = optimize(lower(e, m, split), e);
  CHECK_FALSE(rep2.fully_fused);
  CHECK(rep2.fusible_prefix < m.layer_count() * e.dim_count());
}

TEST_CASE("emitted code computes what the oracle computes") {
  if (!compiler_present()) {
    MESSAGE("no C compiler available, compile checks skipped");
    return;
  }
  for (const char* name : {"dot", "matvec", "histo", "jacobi1d"}) {
    CAPTURE(name);
    HighLevelExpr e = bundled_computation(name);
    AsmModel m = preset("OpenMP");
    auto inputs = make_inputs(e, 13);
    auto want = reference_execute(e, inputs);
    TuningConfig c = sample(e, m, ModelConstraintSet::none(), 2);
    std::string src = emit(lower(e, m, c), e);
    VerifyInfo info = verify_emitted(src, e, inputs, want, 1e-6);
    CHECK_FALSE(info.compiler.empty());
  }
}

TEST_CASE("verify_emitted reports mismatches") {
  if (!compiler_present()) {
    MESSAGE("no C compiler available, compile checks skipped");
    return;
  }
  HighLevelExpr e = bundled_computation("dot");
  AsmModel m = preset("OpenMP");
  auto inputs = make_inputs(e, 3);
  auto want = reference_execute(e, inputs);
  want[0]->data[0].i += 1;
  std::string src = emit(lower(e, m, baseline_config(e, m)), e);
  CHECK_THROWS_WITH_AS(verify_emitted(src, e, inputs, want, 1e-6), doctest::Contains("Mismatch"),
                       Error);
}

TEST_CASE("compile_and_run returns program stdout") {
  if (!compiler_present()) {
    MESSAGE("no C compiler available, compile checks skipped");
    return;
  }
  VerifyInfo info;
  std::string out = compile_and_run(
      "#include <stdio.h>\nint main(void) { printf(\"7 11\\n\"); return 0; }\n", &info);
  CHECK(out == "7 11\n");
  CHECK_FALSE(info.compiler.empty());
  CHECK_THROWS_WITH_AS(compile_and_run("#include <stdlib.h>\nint main(void) { return 3; }\n"),
                       doctest::Contains("Mismatch"), Error);
}
