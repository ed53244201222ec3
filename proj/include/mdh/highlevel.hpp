#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdh/mda.hpp"
#include "mdh/scalar_expr.hpp"
#include "mdh/views.hpp"

namespace mdh {

// A computation in md_hom form: per-dimension sizes, an input view, a scalar
// function, per-dimension combine operators, and an output view.
struct HighLevelExpr {
  std::string name;
  std::vector<std::string> dim_names; // "i", "j", ...
  std::vector<int64_t> sizes;         // N_d, dims are [0, N_d)
  ViewSpec input_view;
  ViewSpec output_view;
  ScalarExpr scalar;
  std::vector<CombineOpSpec> combine; // one per dimension

  int dim_count() const { return static_cast<int>(sizes.size()); }
  std::vector<IndexRange> full_ranges() const;

  // Shape/type coherence: positive sizes, one combine op per dim, access
  // tuples matching buffer ranks, scalar references within declared bounds.
  // Throws on the first defect.
  void validate_structure() const;
};

// Index sets of the combined result: Concat and PrefixSum keep a dimension's
// range, PointWise collapses it to [0, 1).
std::vector<IndexRange> collapsed_ranges(const HighLevelExpr& e);
std::vector<IndexRange> collapsed_ranges(const HighLevelExpr& e, const std::vector<IndexRange>& ranges);

struct Violation {
  std::string code;
  std::string message;
  int dim_a = 0; // offending dimension pair (1-based); equal when a single op is at fault
  int dim_b = 0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

// md_hom is partial: the expression is well-formed iff every non-Concat
// dimension carries the same associative and commutative binary operator.
ValidationReport validate_md_hom(const HighLevelExpr& e);

// The shared fold operator of the non-Concat dimensions, or nullopt when all
// dimensions concatenate.
std::optional<BinOp> shared_fold_op(const HighLevelExpr& e);

// Full pipeline at canonical ascending index order: applies the input view,
// evaluates the scalar function at every index, folds per the combine
// operators, scatters through the output view into freshly allocated buffers.
std::vector<std::shared_ptr<Buffer>> reference_execute(const HighLevelExpr& e,
                                                       const std::vector<std::shared_ptr<Buffer>>& inputs);

// Scalar application + combine fold over an arbitrary index box of an
// already view-applied input MDA; the output view is not applied. The
// result is materialized. Used to probe the homomorphic property on
// sub-ranges: h(concat(a, b, d)) == combine_d(h(a), h(b)).
MdaView apply_md_hom(const HighLevelExpr& e, const MdaView& input, const std::vector<IndexRange>& ranges);

} // namespace mdh
