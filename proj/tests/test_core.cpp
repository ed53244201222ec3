#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <memory>

#include "mdh/error.hpp"
#include "mdh/mda.hpp"
#include "mdh/rng.hpp"
#include "mdh/value.hpp"

using namespace mdh;

namespace {

std::shared_ptr<Buffer> buf1d(std::vector<int64_t> vals) {
  auto b = std::make_shared<Buffer>(Buffer::make({static_cast<int64_t>(vals.size())}, ScalarType::Int64));
  for (size_t t = 0; t < vals.size(); ++t) b->set({static_cast<int64_t>(t)}, {ScalarType::Int64, vals[t], 0.0});
  return b;
}

} // namespace

TEST_CASE("buffer indexing is row major with a defined mask") {
  Buffer b = Buffer::make({2, 3}, ScalarType::Int64);
  CHECK(b.flat_size() == 6);
  CHECK(b.flat_index({1, 2}) == 5);
  CHECK_FALSE(b.is_defined({0, 0}));
  b.set({0, 2}, {ScalarType::Int64, 42, 0.0});
  CHECK(b.is_defined({0, 2}));
  CHECK(b.get({0, 2}).i == 42);
  CHECK_THROWS_WITH_AS(b.flat_index({2, 0}), doctest::Contains("IndexOutOfBounds"), Error);
}

TEST_CASE("reading an undefined cell through an mda view throws") {
  auto b = std::make_shared<Buffer>(Buffer::make({2}, ScalarType::Int64));
  b->set({0}, {ScalarType::Int64, 1, 0.0});
  MdaView m = mda_from_buffer(b);
  CHECK(m.elem({0}).comps[0].i == 1);
  CHECK_THROWS_WITH_AS(m.elem({1}), doctest::Contains("UndefinedCellRead"), Error);
}

TEST_CASE("index ranges are half open") {
  IndexRange r{2, 5};
  CHECK(r.size() == 3);
  CHECK(r.contains(2));
  CHECK_FALSE(r.contains(5));
  CHECK(IndexRange{3, 3}.empty());
}

TEST_CASE("named binary operators carry declared algebra flags") {
  CHECK(BinOp::named("+").declared_assoc_comm);
  CHECK(BinOp::named("*").declared_assoc_comm);
  CHECK(BinOp::named("mul").kind == BinOpKind::Mul);
  CHECK(BinOp::named("min").declared_assoc_comm);
  CHECK(BinOp::named("max").declared_assoc_comm);
  CHECK_FALSE(BinOp::named("-").declared_assoc_comm);
  CHECK_FALSE(BinOp::named("/").declared_assoc_comm);
  CHECK_THROWS_WITH_AS(BinOp::named("xor"), doctest::Contains("UnknownOperator"), Error);
}

TEST_CASE("binop apply covers both scalar types and rejects mixes") {
  BinOp add = BinOp::named("+");
  CHECK(add.apply(ScalarValue::of_i64(3), ScalarValue::of_i64(4)).comps[0].i == 7);
  BinOp mx = BinOp::named("max");
  CHECK(mx.apply(ScalarValue::of_f64(1.5), ScalarValue::of_f64(-2.0)).comps[0].f == 1.5);
  ScalarValue::Comp acc{ScalarType::Int64, 1, 0.0};
  CHECK_THROWS_WITH_AS(add.apply_comp(acc, ScalarValue::Comp{ScalarType::Float64, 0, 2.0}),
                       doctest::Contains("MixedTypes"), Error);
  ScalarValue::Comp z{ScalarType::Int64, 0, 0.0};
  ScalarValue::Comp one{ScalarType::Int64, 1, 0.0};
  CHECK_THROWS_WITH_AS(BinOp::named("/").apply_comp(one, z), doctest::Contains("DivisionByZero"),
                       Error);
}

TEST_CASE("mda over a buffer exposes its cells") {
  auto b = buf1d({10, 20, 30});
  MdaView m = mda_from_buffer(b);
  CHECK(m.dim_count() == 1);
  CHECK(m.cell_count() == 3);
  CHECK(m.elem({1}).comps[0].i == 20);
}

TEST_CASE("concat joins adjacent ranges and keeps cells addressable") {
  auto b = buf1d({1, 2, 3, 4});
  MdaView m = mda_from_buffer(b);
  MdaView lo = restrict_dim(m, 1, {0, 2});
  MdaView hi = restrict_dim(m, 1, {2, 4});
  MdaView joined = concat(lo, hi, 1);
  CHECK(joined.ranges[0] == IndexRange{0, 4});
  CHECK(joined.elem({3}).comps[0].i == 4);
  CHECK_THROWS_WITH_AS(concat(lo, restrict_dim(m, 1, {1, 3}), 1),
                       doctest::Contains("OverlappingDimRanges"), Error);
}

TEST_CASE("concat_inverse splits back into the given ranges") {
  auto b = buf1d({1, 2, 3, 4});
  MdaView m = mda_from_buffer(b);
  auto [lo, hi] = concat_inverse(m, 1, {{0, 1}, {1, 4}});
  CHECK(lo.ranges[0].size() == 1);
  CHECK(hi.ranges[0].size() == 3);
  CHECK(hi.elem({2}).comps[0].i == 3);
  MdaView rejoined = concat(lo, hi, 1);
  CHECK(mda_equal(m, rejoined, 0.0));
  CHECK_THROWS_WITH_AS(concat_inverse(m, 1, {{0, 1}, {2, 4}}),
                       doctest::Contains("RangesNotAPartition"), Error);
}

TEST_CASE("pointwise folds two collapsed slices") {
  auto b = buf1d({5, 7});
  MdaView m = mda_from_buffer(b);
  MdaView lo = restrict_dim(m, 1, {0, 1});
  MdaView hi = reindex_dim_to_zero(restrict_dim(m, 1, {1, 2}), 1);
  MdaView sum = pointwise(BinOp::named("+"), lo, hi, 1);
  CHECK(sum.ranges[0].size() == 1);
  CHECK(sum.elem({0}).comps[0].i == 12);
  CHECK_THROWS_WITH_AS(pointwise(BinOp::named("+"), m, m, 1), doctest::Contains("DimNotCollapsed"),
                       Error);
}

TEST_CASE("prefix_sum_combine adds the lhs boundary to the right block") {
  auto b = buf1d({1, 2, 3, 4});
  MdaView m = mda_from_buffer(b);

  // Each block holds its local prefix sums; the combine carries the boundary.
  auto scan_block = [&](IndexRange r) {
    MdaView blk = restrict_dim(m, 1, r);
    auto acc = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(r.size()));
    int64_t run = 0;
    for (int64_t i = r.lo; i < r.hi; ++i) {
      run += blk.elem({i}).comps[0].i;
      (*acc)[static_cast<size_t>(i - r.lo)] = run;
    }
    MdaView out;
    out.ranges = {r};
    out.elem = [r, acc](const std::vector<int64_t>& ix) {
      return ScalarValue::of_i64((*acc)[static_cast<size_t>(ix[0] - r.lo)]);
    };
    return out;
  };
  MdaView lhs = scan_block({0, 2});
  MdaView rhs = scan_block({2, 4});
  MdaView joined = prefix_sum_combine(BinOp::named("+"), lhs, rhs, 1, PsBoundary{1, 0});
  CHECK(joined.elem({0}).comps[0].i == 1);
  CHECK(joined.elem({1}).comps[0].i == 3);
  CHECK(joined.elem({2}).comps[0].i == 6);
  CHECK(joined.elem({3}).comps[0].i == 10);
  CHECK_THROWS_WITH_AS(prefix_sum_combine(BinOp::named("+"), lhs, rhs, 1, PsBoundary{0, 0}),
                       doctest::Contains("BoundaryMismatch"), Error);
}

TEST_CASE("materialize pins cells and mda_equal compares exactly") {
  auto b = buf1d({1, 2, 3});
  MdaView m = materialize(mda_from_buffer(b));
  b->set({0}, {ScalarType::Int64, 99, 0.0});
  CHECK(m.elem({0}).comps[0].i == 1); // detached from the buffer
  CHECK_FALSE(mda_equal(m, mda_from_buffer(b), 0.0));
}

TEST_CASE("for_each_index walks the box in ascending row-major order") {
  std::vector<std::vector<int64_t>> seen;
  for_each_index({{0, 2}, {1, 3}}, [&](const std::vector<int64_t>& ix) { seen.push_back(ix); });
  REQUIRE(seen.size() == 4);
  CHECK(seen.front() == std::vector<int64_t>{0, 1});
  CHECK(seen[1] == std::vector<int64_t>{0, 2});
  CHECK(seen.back() == std::vector<int64_t>{1, 2});
  int calls = 0;
  for_each_index({{0, 3}, {2, 2}}, [&](const std::vector<int64_t>&) { ++calls; });
  CHECK(calls == 0);
}

TEST_CASE("rng sequence is pinned and shuffle is deterministic") {
  Rng a(7), b(7);
  for (int k = 0; k < 100; ++k) CHECK(a.below(97) == b.below(97));
  std::vector<int> v1{1, 2, 3, 4, 5}, v2{1, 2, 3, 4, 5};
  Rng s1(3), s2(3);
  s1.shuffle(v1);
  s2.shuffle(v2);
  CHECK(v1 == v2);
  CHECK(Rng(0).below(1) == 0);
  CHECK(Rng(0).below(0) == 0);
}

TEST_CASE("nearly_equal uses a floor of 1 on the scale") {
  CHECK(nearly_equal(0.0, 1e-13, 1e-12));
  CHECK_FALSE(nearly_equal(0.0, 1e-11, 1e-12));
  CHECK(nearly_equal(1e9, 1e9 * (1 + 1e-13), 1e-12));
  CHECK(nearly_equal(3.5, 3.5, 0.0));
}

TEST_CASE("errors carry a stable machine readable code") {
  try {
    fail("Mismatch", "probe");
  } catch (const Error& e) {
    CHECK(e.code == "Mismatch");
    CHECK(std::string(e.what()) == "Mismatch: probe");
  }
}
