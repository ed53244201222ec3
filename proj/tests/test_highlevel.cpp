#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mdh/highlevel.hpp"
#include "mdh/json_io.hpp"
#include "support.hpp"

using namespace mdh;

namespace {

std::shared_ptr<Buffer> fill_i64(std::vector<int64_t> dims, std::vector<int64_t> vals) {
  auto b = std::make_shared<Buffer>(Buffer::make(dims, ScalarType::Int64));
  for (size_t t = 0; t < vals.size(); ++t) {
    b->data[t] = {ScalarType::Int64, vals[t], 0.0};
    b->defined[t] = 1;
  }
  return b;
}

std::shared_ptr<Buffer> fill_f64(std::vector<int64_t> dims, std::vector<double> vals) {
  auto b = std::make_shared<Buffer>(Buffer::make(dims, ScalarType::Float64));
  for (size_t t = 0; t < vals.size(); ++t) {
    b->data[t] = {ScalarType::Float64, 0, vals[t]};
    b->defined[t] = 1;
  }
  return b;
}

} // namespace

TEST_CASE("all bundled computations parse and validate") {
  int n = 0;
  for (const auto& entry : bundled::computations()) {
    HighLevelExpr e = parse_computation_json(entry.content);
    CHECK(e.name == entry.name);
    CHECK(validate_md_hom(e).ok);
    ++n;
  }
  CHECK(n >= 16);
}

TEST_CASE("input view of a 2x2 matvec yields the access tuples") {
  HighLevelExpr e = bundled_computation("matvec");
  e.sizes = {2, 2};
  auto M = fill_i64({2, 2}, {1, 2, 3, 4});
  auto v = fill_i64({2}, {5, 6});
  MdaView mda = apply_input_view(e.input_view, {M, v}, e.full_ranges());
  ScalarValue cell = mda.elem({0, 1});
  REQUIRE(cell.arity() == 2);
  CHECK(cell.comps[0].i == 2);
  CHECK(cell.comps[1].i == 6);
}

TEST_CASE("reference_execute matvec 2x2") {
  HighLevelExpr e = bundled_computation("matvec");
  e.sizes = {2, 2};
  auto out = reference_execute(e, {fill_i64({2, 2}, {1, 2, 3, 4}), fill_i64({2}, {5, 6})});
  REQUIRE(out.size() == 1);
  CHECK(out[0]->dims == std::vector<int64_t>{2});
  CHECK(out[0]->get({0}).i == 17);
  CHECK(out[0]->get({1}).i == 39);
}

TEST_CASE("reference_execute dot product") {
  HighLevelExpr e = bundled_computation("dot");
  e.sizes = {3};
  auto out = reference_execute(e, {fill_i64({3}, {1, 2, 3}), fill_i64({3}, {4, 5, 6})});
  CHECK(out[0]->get({0}).i == 32);
}

TEST_CASE("jacobi1d stencil window and weights") {
  HighLevelExpr e = bundled_computation("jacobi1d");
  e.sizes = {2};
  auto v = fill_f64({4}, {1.0, 2.0, 3.0, 4.0});
  MdaView mda = apply_input_view(e.input_view, {v}, e.full_ranges());
  ScalarValue c0 = mda.elem({0});
  REQUIRE(c0.arity() == 3);
  CHECK(c0.comps[0].f == 1.0);
  CHECK(c0.comps[1].f == 2.0);
  CHECK(c0.comps[2].f == 3.0);
  auto out = reference_execute(e, {v});
  CHECK(out[0]->get({0}).f == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out[0]->get({1}).f == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("histogram counts hits per bin") {
  HighLevelExpr e = bundled_computation("histo");
  e.sizes = {4, 4};
  auto out = reference_execute(e, {fill_i64({4}, {0, 1, 1, 2})});
  CHECK(out[0]->get({0}).i == 1);
  CHECK(out[0]->get({1}).i == 2);
  CHECK(out[0]->get({2}).i == 1);
  CHECK(out[0]->get({3}).i == 0);
}

TEST_CASE("scan produces prefix sums") {
  HighLevelExpr e = bundled_computation("scan");
  e.sizes = {5};
  auto out = reference_execute(e, {fill_i64({5}, {1, 2, 3, 4, 5})});
  std::vector<int64_t> want{1, 3, 6, 10, 15};
  for (int64_t i = 0; i < 5; ++i) CHECK(out[0]->get({i}).i == want[static_cast<size_t>(i)]);
}

TEST_CASE("double_reduce assigns both tuple components") {
  HighLevelExpr e = bundled_computation("double_reduce");
  e.sizes = {3};
  auto out = reference_execute(e, {fill_i64({3}, {1, 2, 3})});
  REQUIRE(out.size() == 2);
  CHECK(out[0]->get({0}).i == 6);
  CHECK(out[1]->get({0}).i == 14);
}

TEST_CASE("row-reversed access feeds the mbbs scan") {
  HighLevelExpr e = bundled_computation("mbbs");
  std::vector<int64_t> grid(64);
  for (size_t t = 0; t < 64; ++t) grid[t] = static_cast<int64_t>(t % 5);
  auto out = reference_execute(e, {fill_i64({8, 8}, grid)});
  // sums[i][j] accumulates grid[7-t][j] for t <= i
  int64_t acc = 0;
  for (int64_t i = 0; i < 8; ++i) {
    acc += grid[static_cast<size_t>((7 - i) * 8 + 3)];
    CHECK(out[0]->get({i, 3}).i == acc);
  }
}

TEST_CASE("buffer size inference pins") {
  HighLevelExpr mv = bundled_computation("matvec");
  auto sizes = infer_buffer_sizes(mv.input_view, {{0, 1024}, {0, 512}});
  REQUIRE(sizes.size() == 2);
  CHECK(sizes[0] == std::vector<int64_t>{1024, 512});
  CHECK(sizes[1] == std::vector<int64_t>{512});

  HighLevelExpr j1 = bundled_computation("jacobi1d");
  auto jsz = infer_buffer_sizes(j1.input_view, {{0, 510}});
  CHECK(jsz[0] == std::vector<int64_t>{512});
  auto josz = infer_buffer_sizes(j1.output_view, {{0, 510}});
  CHECK(josz[0] == std::vector<int64_t>{510});
}

TEST_CASE("collapsed_ranges keeps concat and prefix dims, collapses pointwise") {
  HighLevelExpr e = bundled_computation("matmul"); // cc, cc, pw:+
  auto r = collapsed_ranges(e);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == IndexRange{0, 8});
  CHECK(r[1] == IndexRange{0, 8});
  CHECK(r[2] == IndexRange{0, 1});
  HighLevelExpr s = bundled_computation("scan"); // ps:+
  CHECK(collapsed_ranges(s)[0] == IndexRange{0, 16});
}

TEST_CASE("validate_structure rejects malformed expressions") {
  HighLevelExpr e = bundled_computation("matvec");
  SUBCASE("zero size") {
    e.sizes = {0, 16};
    CHECK_THROWS_AS(e.validate_structure(), Error);
  }
  SUBCASE("combine count mismatch") {
    e.combine.pop_back();
    CHECK_THROWS_AS(e.validate_structure(), Error);
  }
  SUBCASE("pointwise without operator") {
    e.combine[1].binop.reset();
    CHECK_THROWS_AS(e.validate_structure(), Error);
  }
  SUBCASE("access arity differs from rank") {
    e.input_view.buffers[0].rank = 3;
    CHECK_THROWS_AS(e.validate_structure(), Error);
  }
  SUBCASE("rank below one") {
    e.input_view.buffers[1].rank = 0;
    e.input_view.buffers[1].accesses.clear();
    CHECK_THROWS_AS(e.validate_structure(), Error);
  }
}

TEST_CASE("md_hom validity requires one shared fold operator") {
  HighLevelExpr e = bundled_computation("matmul");
  CHECK(validate_md_hom(e).ok);
  CHECK(shared_fold_op(e)->kind == BinOpKind::Add);

  SUBCASE("mixed fold operators") {
    e.combine[0] = CombineOpSpec::pointwise(BinOp::named("*"));
    ValidationReport rep = validate_md_hom(e);
    REQUIRE_FALSE(rep.ok);
    CHECK(rep.violations[0].code == "MixedIncompatibleOperators");
    CHECK(rep.violations[0].dim_a == 1);
    CHECK(rep.violations[0].dim_b == 3);
  }
  SUBCASE("non associative fold") {
    e.combine[2] = CombineOpSpec::pointwise(BinOp::named("-"));
    ValidationReport rep = validate_md_hom(e);
    REQUIRE_FALSE(rep.ok);
    CHECK(rep.violations[0].code == "MixedIncompatibleOperators");
  }
  SUBCASE("all concat needs no fold operator") {
    HighLevelExpr m = bundled_computation("map");
    CHECK(validate_md_hom(m).ok);
    CHECK_FALSE(shared_fold_op(m).has_value());
  }
}

TEST_CASE("md_hom homomorphic split along a concat dimension") {
  HighLevelExpr e = bundled_computation("matvec"); // 8 x 16
  auto inputs = mdhtest::make_inputs(e, 5);
  MdaView in = apply_input_view(e.input_view, inputs, e.full_ranges());
  MdaView whole = apply_md_hom(e, in, {{0, 8}, {0, 16}});
  MdaView left = apply_md_hom(e, in, {{0, 3}, {0, 16}});
  MdaView right = apply_md_hom(e, in, {{3, 8}, {0, 16}});
  CHECK(mda_equal(whole, concat(left, right, 1), 0.0));
}

TEST_CASE("md_hom homomorphic split along a pointwise dimension") {
  HighLevelExpr e = bundled_computation("matvec");
  auto inputs = mdhtest::make_inputs(e, 6);
  MdaView in = apply_input_view(e.input_view, inputs, e.full_ranges());
  MdaView whole = apply_md_hom(e, in, {{0, 8}, {0, 16}});
  MdaView left = apply_md_hom(e, in, {{0, 8}, {0, 5}});
  MdaView right = apply_md_hom(e, in, {{0, 8}, {5, 16}});
  CHECK(mda_equal(whole, pointwise(*shared_fold_op(e), left, right, 2), 0.0));
}

TEST_CASE("output view rejects inconsistent non-injective writes") {
  // Two accesses of one buffer land on the same cell with different values.
  ViewSpec ov;
  ov.buffers.push_back({"o", ScalarType::Int64, 1, {ViewAccess::parse("0", 1), ViewAccess::parse("0", 1)}});
  MdaView mda;
  mda.ranges = {{0, 1}};
  mda.elem = [](const std::vector<int64_t>&) {
    return ScalarValue::tuple({{ScalarType::Int64, 1, 0.0}, {ScalarType::Int64, 2, 0.0}});
  };
  CHECK_THROWS_WITH_AS(apply_output_view(ov, mda), doctest::Contains("InconsistentNonInjectiveWrite"),
                       Error);
}

TEST_CASE("computation json round trips") {
  for (const char* name : {"matmul", "conv2d", "jacobi1d", "double_reduce", "mbbs"}) {
    HighLevelExpr e = bundled_computation(name);
    HighLevelExpr e2 = parse_computation_json(computation_to_json(e));
    CHECK(e2.name == e.name);
    CHECK(e2.sizes == e.sizes);
    CHECK(computation_to_json(e2) == computation_to_json(e));
  }
}

TEST_CASE("ref data files agree with reference_execute") {
  for (const auto& entry : bundled::computations()) {
    HighLevelExpr e = parse_computation_json(entry.content);
    bool small = true;
    for (int64_t s : e.sizes) small = small && s <= 16;
    if (!small) continue;
    CAPTURE(e.name);
    RefData ref = parse_ref_json(mdhtest::slurp(mdhtest::data_path("refs/" + e.name + ".ref.json")), e);
    auto out = reference_execute(e, ref.inputs);
    std::string why;
    CHECK_MESSAGE(mdhtest::buffers_match(out, ref.outputs, 1e-12, &why), why);
  }
}
