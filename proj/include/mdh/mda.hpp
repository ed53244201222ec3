#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mdh/value.hpp"

namespace mdh {

// Half-open [lo, hi). Index sets are contiguous ranges; the partitioning
// machinery never produces anything else.
struct IndexRange {
  int64_t lo = 0;
  int64_t hi = 0;
  int64_t size() const { return hi - lo; }
  bool empty() const { return hi <= lo; }
  bool contains(int64_t i) const { return i >= lo && i < hi; }
  bool operator==(const IndexRange& o) const { return lo == o.lo && hi == o.hi; }
};

// Dense zero-based storage with an explicit defined-mask; no sentinel values.
struct Buffer {
  std::vector<int64_t> dims;
  ScalarType elem_type = ScalarType::Int64;
  std::vector<ScalarValue::Comp> data;
  std::vector<uint8_t> defined;

  static Buffer make(std::vector<int64_t> dims, ScalarType t);
  int64_t flat_size() const;
  int64_t flat_index(const std::vector<int64_t>& idx) const;
  ScalarValue::Comp get(const std::vector<int64_t>& idx) const;
  void set(const std::vector<int64_t>& idx, ScalarValue::Comp v);
  bool is_defined(const std::vector<int64_t>& idx) const;
};

// Lazy multi-dimensional array: ranges plus a pure element function.
// elem is total on the cross product of ranges, with one carve-out: a concat
// of non-adjacent ranges hulls the dim range, and the gap cells (owned by
// neither side) reject reads. No pipeline path produces such gaps.
struct MdaView {
  std::vector<IndexRange> ranges;
  std::function<ScalarValue(const std::vector<int64_t>&)> elem;

  int dim_count() const { return static_cast<int>(ranges.size()); }
  int64_t cell_count() const;
  bool empty() const;
};

enum class BinOpKind { Add, Sub, Mul, Div, Min, Max };

// Binary operator usable as a combine-op payload. Associativity/commutativity
// is declared by the caller and spot-checked by tests, never assumed.
struct BinOp {
  BinOpKind kind = BinOpKind::Add;
  bool declared_assoc_comm = false;

  static BinOp named(const std::string& name);
  std::string name() const;
  ScalarValue apply(const ScalarValue& a, const ScalarValue& b) const;
  void apply_comp(ScalarValue::Comp& acc, const ScalarValue::Comp& v) const;
};

enum class CombineKind { Concat, PointWise, PrefixSum };
enum class IndexSetFn { Identity, ConstZero };

struct CombineOpSpec {
  CombineKind kind = CombineKind::Concat;
  std::optional<BinOp> binop; // absent for Concat
  IndexSetFn index_set_fn = IndexSetFn::Identity;

  static CombineOpSpec concat() { return {CombineKind::Concat, std::nullopt, IndexSetFn::Identity}; }
  static CombineOpSpec pointwise(BinOp op) { return {CombineKind::PointWise, op, IndexSetFn::ConstZero}; }
  static CombineOpSpec prefix_sum(BinOp op) { return {CombineKind::PrefixSum, op, IndexSetFn::Identity}; }
  std::string to_string() const;
};

// --- combine operators -------------------------------------------------

MdaView concat(const MdaView& lhs, const MdaView& rhs, int dim);

std::pair<MdaView, MdaView> concat_inverse(const MdaView& mda, int dim,
                                           std::pair<IndexRange, IndexRange> split_ranges);

MdaView pointwise(const BinOp& binop, const MdaView& lhs, const MdaView& rhs, int dim);

struct PsBoundary {
  int64_t lhs_max_index = 0; // max index of the lhs range at dim
  int64_t min_context = 0;   // lowest index for which context exists (lhs lo)
};

MdaView prefix_sum_combine(const BinOp& binop, const MdaView& lhs, const MdaView& rhs,
                           int dim, PsBoundary boundary);

// --- helpers -----------------------------------------------------------

MdaView mda_from_buffer(std::shared_ptr<Buffer> buf);
MdaView restrict_dim(const MdaView& m, int dim, IndexRange r);
MdaView reindex_dim_to_zero(const MdaView& m, int dim); // collapse helper for point-wise folds
MdaView materialize(const MdaView& m);
bool mda_equal(const MdaView& a, const MdaView& b, double rel_tol);
void for_each_index(const std::vector<IndexRange>& ranges,
                    const std::function<void(const std::vector<int64_t>&)>& fn);

} // namespace mdh
