#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "mdh/json_io.hpp"
#include "mdh/lowering.hpp"
#include "support.hpp"

using namespace mdh;

TEST_CASE("partition_range implements the offset formula") {
  CHECK(partition_range(512, {2, 8, 32}, {1, 0, 0}) == IndexRange{256, 257});
  CHECK(partition_range(512, {2, 8, 32}, {1}) == IndexRange{256, 512});
  CHECK(partition_range(512, {2, 8, 32}, {0, 1}) == IndexRange{32, 64});
  CHECK(partition_range(512, {2, 8, 32}, {}) == IndexRange{0, 512});
  CHECK(partition_range(12, {3}, {2}) == IndexRange{8, 12});
  CHECK_THROWS_WITH_AS(partition_range(16, {3}, {0}), doctest::Contains("NonDivisible"), Error);
}

TEST_CASE("partition scheme strides divide layer by layer") {
  PartitionScheme s{24, {2, 3, 4}};
  CHECK(s.stride(0) == 24);
  CHECK(s.stride(1) == 12);
  CHECK(s.stride(2) == 4);
  CHECK(s.stride(3) == 1);
  CHECK(s.range({1, 2, 3}) == IndexRange{23, 24});
  CHECK(s.range({0, 1}) == IndexRange{4, 8});
}

TEST_CASE("partitions tile the range at every depth") {
  PartitionScheme s{24, {2, 3, 4}};
  for (int depth = 1; depth <= 3; ++depth) {
    std::vector<int64_t> radix(s.counts.begin(), s.counts.begin() + depth);
    int64_t combos = 1;
    for (int64_t c : radix) combos *= c;
    int64_t expect_lo = 0;
    for (int64_t n = 0; n < combos; ++n) {
      std::vector<int64_t> p(radix.size());
      int64_t rem = n;
      for (size_t d = radix.size(); d-- > 0;) {
        p[d] = rem % radix[d];
        rem /= radix[d];
      }
      IndexRange r = s.range(p);
      CHECK(r.lo == expect_lo); // contiguous and disjoint
      expect_lo = r.hi;
    }
    CHECK(expect_lo == 24); // exhaustive
  }
}

TEST_CASE("lowering produces view stage plus one step per level and phase") {
  HighLevelExpr e = bundled_computation("matmul");
  AsmModel m = preset("OpenMP");
  TuningConfig c = baseline_config(e, m);
  LowLevelExpr ll = lower(e, m, c);
  const int LD = m.layer_count() * e.dim_count();
  REQUIRE(ll.de_steps.size() == static_cast<size_t>(LD) + 1);
  REQUIRE(ll.re_steps.size() == static_cast<size_t>(LD) + 1);
  CHECK(ll.de_steps.front().view_stage);
  CHECK(ll.re_steps.back().view_stage);
  std::set<std::pair<int, int>> seen;
  for (size_t k = 1; k < ll.de_steps.size(); ++k) {
    const PhaseStep& st = ll.de_steps[k];
    CHECK_FALSE(st.view_stage);
    CHECK(st.inverse);
    seen.insert({st.level.layer, st.level.dim});
  }
  CHECK(seen.size() == static_cast<size_t>(LD)); // every level exactly once
  CHECK(ll.scalar_step.order == c.ord_scalar);
}

TEST_CASE("re steps carry the dimension combine operators") {
  HighLevelExpr e = bundled_computation("matvec"); // cc, pw:+
  AsmModel m = preset("OpenMP");
  LowLevelExpr ll = lower(e, m, baseline_config(e, m));
  for (size_t k = 0; k + 1 < ll.re_steps.size(); ++k) {
    const PhaseStep& st = ll.re_steps[k];
    if (st.level.dim == 1)
      CHECK(st.op.kind == CombineKind::Concat);
    else
      CHECK(st.op.kind == CombineKind::PointWise);
  }
}

TEST_CASE("lowering rejects invalid configurations") {
  HighLevelExpr e = bundled_computation("matvec");
  AsmModel m = preset("OpenMP");
  TuningConfig c = baseline_config(e, m);
  c.num_parts[0][0] = 3;
  CHECK_THROWS_WITH_AS(lower(e, m, c), doctest::Contains("InvalidConfig"), Error);
  HighLevelExpr bad = e;
  bad.combine[1] = CombineOpSpec::pointwise(BinOp::named("-"));
  CHECK_THROWS_WITH_AS(lower(bad, m, baseline_config(bad, m)), doctest::Contains("InvalidConfig"),
                       Error);
}

TEST_CASE("pretty form round trips through the parser") {
  HighLevelExpr e = bundled_computation("conv2d");
  AsmModel m = preset("CUDA");
  TuningConfig c = sample(e, m, ModelConstraintSet::for_model(m), 23);
  LowLevelExpr ll = lower(e, m, c);
  std::string text = ll.pretty();
  LowLevelExpr back = parse_lowlevel_pretty(text);
  CHECK(back.pretty() == text);
  CHECK(back.computation == ll.computation);
  CHECK(back.de_steps.size() == ll.de_steps.size());
  CHECK(back.re_steps.size() == ll.re_steps.size());
  for (size_t k = 0; k < ll.de_steps.size(); ++k) {
    CHECK(back.de_steps[k].level == ll.de_steps[k].level);
    CHECK(back.de_steps[k].tag.layer == ll.de_steps[k].tag.layer);
  }
}

TEST_CASE("staging annotations carry region names onto the steps") {
  HighLevelExpr e = bundled_computation("matvec");
  AsmModel m = preset("Artificial2+1");
  TuningConfig c = baseline_config(e, m);
  int l1 = m.region_id("L1");
  for (auto& row : c.mem_de) row.assign(row.size(), l1);
  LowLevelExpr ll = lower(e, m, c);
  for (size_t k = 1; k < ll.de_steps.size(); ++k) {
    REQUIRE(ll.de_steps[k].staging.size() == 2);
    CHECK(ll.de_steps[k].staging[0].buffer == "M");
    CHECK(ll.de_steps[k].staging[0].region == "L1");
  }
}
