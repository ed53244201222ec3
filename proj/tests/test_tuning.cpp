#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "mdh/json_io.hpp"
#include "mdh/tuning.hpp"
#include "support.hpp"

using namespace mdh;

namespace {

bool has_code(const ValidationReport& rep, const std::string& code) {
  for (const auto& v : rep.violations)
    if (v.code == code) return true;
  return false;
}

} // namespace

TEST_CASE("baseline config is valid on every preset") {
  HighLevelExpr e = bundled_computation("matmul");
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    AsmModel m = preset(name);
    TuningConfig c = baseline_config(e, m);
    CHECK(c.layer_count() == m.layer_count());
    CHECK(c.dim_count() == 3);
    ValidationReport rep = validate(c, e, m, ModelConstraintSet::for_model(m));
    CHECK(rep.ok);
  }
}

TEST_CASE("structural rules answer with their rule ids") {
  HighLevelExpr e = bundled_computation("matmul");
  AsmModel m = preset("OpenMP");
  auto base = [&] { return baseline_config(e, m); };
  auto none = ModelConstraintSet::none();

  SUBCASE("structure") {
    TuningConfig c = base();
    c.num_parts.pop_back();
    CHECK(has_code(validate(c, e, m, none), "structure"));
    TuningConfig c2 = base();
    c2.ord_de.pop_back();
    CHECK(has_code(validate(c2, e, m, none), "structure"));
    TuningConfig c3 = base();
    c3.mem_de.pop_back();
    CHECK(has_code(validate(c3, e, m, none), "structure"));
  }
  SUBCASE("full partitioning") {
    TuningConfig c = base();
    c.num_parts[1][0] = 3; // 8 = 3 * x has no integer completion
    CHECK(has_code(validate(c, e, m, none), "full partitioning"));
  }
  SUBCASE("order bijection") {
    TuningConfig c = base();
    c.ord_re[0] = c.ord_re[1];
    CHECK(has_code(validate(c, e, m, none), "order bijection"));
  }
  SUBCASE("assignment bijection") {
    TuningConfig c = base();
    c.ass_scalar[0] = c.ass_scalar[1];
    CHECK(has_code(validate(c, e, m, none), "assignment bijection"));
  }
  SUBCASE("region range") {
    TuningConfig c = base();
    c.mem_de[0][0] = 99;
    CHECK(has_code(validate(c, e, m, none), "region range"));
    TuningConfig c2 = base();
    c2.mem_scalar_out[0] = 0;
    CHECK(has_code(validate(c2, e, m, none), "region range"));
  }
  SUBCASE("layout permutation") {
    TuningConfig c = base();
    c.layout_de[0][0] = {1, 1};
    CHECK(has_code(validate(c, e, m, none), "layout permutation"));
    TuningConfig c2 = base();
    c2.layout_scalar_in[0] = {2, 3};
    CHECK(has_code(validate(c2, e, m, none), "layout permutation"));
  }
}

TEST_CASE("full space sampling is deterministic and valid") {
  HighLevelExpr e = bundled_computation("conv2d");
  AsmModel m = preset("CUDA");
  auto cs = ModelConstraintSet::for_model(m);
  for (uint64_t seed : {0ULL, 3ULL, 17ULL}) {
    TuningConfig a = sample(e, m, cs, seed);
    TuningConfig b = sample(e, m, cs, seed);
    CHECK(config_to_json(a, e, m) == config_to_json(b, e, m));
    CHECK(validate(a, e, m, cs).ok);
  }
  CHECK(config_to_json(sample(e, m, cs, 1), e, m) != config_to_json(sample(e, m, cs, 2), e, m));
}

TEST_CASE("ordered factorizations count and sample correctly") {
  // n=12, k=2: (1,12),(2,6),(3,4),(4,3),(6,2),(12,1)
  CHECK(ordered_factorization_count(12, 2) == 6);
  CHECK(ordered_factorization_count(1, 3) == 1);
  CHECK(ordered_factorization_count(8, 1) == 1);
  CHECK(ordered_factorization_count(16, 3) == 15);

  Rng rng(5);
  std::map<std::vector<int64_t>, int> seen;
  for (int t = 0; t < 600; ++t) {
    auto f = sample_ordered_factorization(12, 2, rng);
    REQUIRE(f.size() == 2);
    CHECK(f[0] * f[1] == 12);
    seen[f]++;
  }
  CHECK(seen.size() == 6); // all factorizations reachable
}

TEST_CASE("reduced space samples are valid and share one phase order") {
  HighLevelExpr e = bundled_computation("matmul");
  for (const char* pname : {"OpenMP", "CUDA", "OpenCL"}) {
    CAPTURE(pname);
    AsmModel m = preset(pname);
    ReducedSpace space = reduce_space(e, m);
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
      TuningConfig c = space.sample(rng);
      CHECK(validate(c, e, m, ModelConstraintSet::for_model(m)).ok);
      CHECK(c.ord_de == c.ord_scalar);
      CHECK(c.ord_de == c.ord_re);
      for (size_t b = 0; b < c.layout_de.size(); ++b)
        for (const auto& p : c.layout_de[b]) CHECK(p == c.layout_de[b][0]);
    }
    CHECK(space.log2_cardinality() > 0.0);
    CHECK(full_space_log2_cardinality(e, m) > space.log2_cardinality());
  }
}

TEST_CASE("model constraint sets attach to the matching presets") {
  CHECK(ModelConstraintSet::for_model(preset("CUDA")).name == "CUDA");
  CHECK(ModelConstraintSet::for_model(preset("CUDA+WRP")).name == "CUDA+WRP");
  CHECK(ModelConstraintSet::for_model(preset("OpenCL")).name == "OpenCL");
  CHECK(ModelConstraintSet::for_model(preset("OpenMP")).name == "None");
  CHECK(ModelConstraintSet::for_model(preset("MultiGPU")).name == "None");
}

TEST_CASE("cuda capacity rule counts parts per assignment") {
  HighLevelExpr e = bundled_computation("matmul");
  e.sizes = {16, 16, 16};
  AsmModel m = preset("CUDA");
  auto cs = ModelConstraintSet::for_model(m);
  TuningConfig c = baseline_config(e, m);
  // Move all parts onto MDH layer 2 and assign that layer to CC.
  c.num_parts[0] = {1, 1, 1};
  c.num_parts[1] = {16, 16, 16};
  for (auto* ass : {&c.ass_de, &c.ass_scalar, &c.ass_re})
    for (auto& a : *ass) {
      if (a.layer == 2)
        a.layer = 5;
      else if (a.layer == 5)
        a.layer = 2;
    }
  ValidationReport rep = validate(c, e, m, cs);
  REQUIRE_FALSE(rep.ok);
  CHECK(has_code(rep, "Number of CCs limited"));

  c.num_parts[1] = {16, 16, 4};
  c.num_parts[2] = {1, 1, 4};
  CHECK(validate(c, e, m, cs).ok);
}

TEST_CASE("combine region rules inspect the re phase only") {
  HighLevelExpr e = bundled_computation("matmul");
  e.sizes = {16, 16, 16};
  AsmModel m = preset("CUDA");
  auto cs = ModelConstraintSet::for_model(m);
  TuningConfig c = baseline_config(e, m);
  // Dim 3 folds; give layer 1 two parts there and assign layer 1 to SMX.
  c.num_parts[0] = {1, 1, 2};
  c.num_parts[1] = {16, 16, 8};
  for (auto* ass : {&c.ass_de, &c.ass_scalar, &c.ass_re})
    for (auto& a : *ass) {
      if (a.layer == 1)
        a.layer = 4;
      else if (a.layer == 4)
        a.layer = 1;
    }
  int rank = level_rank(MdhLevel{1, 3}, 3);
  c.mem_re[0][static_cast<size_t>(rank)] = m.region_id("SM");
  ValidationReport rep = validate(c, e, m, cs);
  REQUIRE_FALSE(rep.ok);
  CHECK(has_code(rep, "SMXs combine in DM"));

  c.mem_re[0][static_cast<size_t>(rank)] = m.region_id("DM");
  CHECK(validate(c, e, m, cs).ok);

  // The same staging on mem_de is unconstrained.
  c.mem_de[0][static_cast<size_t>(rank)] = m.region_id("RM");
  CHECK(validate(c, e, m, cs).ok);
}

TEST_CASE("opencl capacity rule uses the device constant") {
  HighLevelExpr e = bundled_computation("matmul");
  e.sizes = {16, 16, 16};
  AsmModel m = preset("OpenCL");
  auto cs = ModelConstraintSet::for_model(m);
  TuningConfig c = baseline_config(e, m);
  c.num_parts[0] = {1, 1, 1};
  c.num_parts[4] = {16, 16, 16}; // identity assignment: layer 5 = PE
  c.num_parts[0][0] = 1;
  // restore full partitioning: dims need 16 = 16, ok per dim
  ValidationReport rep = validate(c, e, m, cs);
  REQUIRE_FALSE(rep.ok);
  CHECK(has_code(rep, "Number of PEs limited"));
  c.c_dev = 4096;
  CHECK(validate(c, e, m, cs).ok);
}

TEST_CASE("bundled fixtures validate under their model constraints") {
  for (const char* name : {"tvm_gpu", "tvm_cpu", "ppcg_gpu", "pluto_cpu"}) {
    CAPTURE(name);
    Fixture f = fixture(name);
    CHECK(f.spec_name == "matmul_resnet");
    CHECK(f.sizes == std::vector<int64_t>{16, 1000, 2048});
    HighLevelExpr e = bundled_computation(f.spec_name);
    e.sizes = f.sizes;
    CHECK(validate(f.config, e, f.model, ModelConstraintSet::for_model(f.model)).ok);
  }
  CHECK_THROWS_WITH_AS(fixture("nope"), doctest::Contains("UnknownFixture"), Error);
}

TEST_CASE("config json round trips through the canonical form") {
  HighLevelExpr e = bundled_computation("matvec");
  AsmModel m = preset("CUDA");
  TuningConfig c = sample(e, m, ModelConstraintSet::for_model(m), 9);
  std::string j = config_to_json(c, e, m);
  TuningConfig c2 = parse_config_json(j, e, m);
  CHECK(config_to_json(c2, e, m) == j);
}

TEST_CASE("config json accepts names and broadcast shorthands") {
  HighLevelExpr e = bundled_computation("matvec");
  AsmModel m = preset("OpenMP");
  TuningConfig c = parse_config_json(R"({
    "num_parts": [[8, 1], [1, 16], [1, 1], [1, 1]],
    "mem_de": {"M": "L1", "v": 2},
    "mem_scalar_in": {"M": "L1", "v": "L1"},
    "layout_de": {"M": [2, 1]}
  })", e, m);
  CHECK(c.num_parts[0][0] == 8);
  CHECK(c.num_parts[1][1] == 16);
  int l1 = m.region_id("L1");
  for (int r : c.mem_de[0]) CHECK(r == l1);
  for (int r : c.mem_de[1]) CHECK(r == 2);
  CHECK(c.mem_scalar_in[0] == l1);
  for (const auto& p : c.layout_de[0]) CHECK(p == std::vector<int>{2, 1});
  CHECK(validate(c, e, m, ModelConstraintSet::none()).ok);
}
