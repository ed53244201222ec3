#include "mdh/mda.hpp"

#include <algorithm>
#include <sstream>

namespace mdh {

std::string ScalarValue::to_string() const {
  std::ostringstream os;
  if (is_tuple) os << "(";
  for (size_t c = 0; c < comps.size(); ++c) {
    if (c) os << ",";
    if (comps[c].type == ScalarType::Int64)
      os << comps[c].i;
    else
      os << comps[c].f;
  }
  if (is_tuple) os << ")";
  return os.str();
}

Buffer Buffer::make(std::vector<int64_t> dims, ScalarType t) {
  Buffer b;
  b.dims = std::move(dims);
  b.elem_type = t;
  int64_t n = 1;
  for (int64_t d : b.dims) n *= d;
  b.data.assign(static_cast<size_t>(n), ScalarValue::Comp{t, 0, 0.0});
  b.defined.assign(static_cast<size_t>(n), 0);
  return b;
}

int64_t Buffer::flat_size() const {
  int64_t n = 1;
  for (int64_t d : dims) n *= d;
  return n;
}

int64_t Buffer::flat_index(const std::vector<int64_t>& idx) const {
  int64_t flat = 0;
  for (size_t d = 0; d < dims.size(); ++d) {
    if (idx[d] < 0 || idx[d] >= dims[d])
      fail("IndexOutOfBounds", "buffer index out of bounds");
    flat = flat * dims[d] + idx[d];
  }
  return flat;
}

ScalarValue::Comp Buffer::get(const std::vector<int64_t>& idx) const {
  return data[static_cast<size_t>(flat_index(idx))];
}

void Buffer::set(const std::vector<int64_t>& idx, ScalarValue::Comp v) {
  int64_t flat = flat_index(idx);
  data[static_cast<size_t>(flat)] = v;
  defined[static_cast<size_t>(flat)] = 1;
}

bool Buffer::is_defined(const std::vector<int64_t>& idx) const {
  return defined[static_cast<size_t>(flat_index(idx))] != 0;
}

int64_t MdaView::cell_count() const {
  int64_t n = 1;
  for (const auto& r : ranges) n *= std::max<int64_t>(r.size(), 0);
  return n;
}

bool MdaView::empty() const {
  for (const auto& r : ranges)
    if (r.empty()) return true;
  return false;
}

BinOp BinOp::named(const std::string& name) {
  if (name == "+") return {BinOpKind::Add, true};
  if (name == "*" || name == "mul") return {BinOpKind::Mul, true};
  if (name == "min") return {BinOpKind::Min, true};
  if (name == "max") return {BinOpKind::Max, true};
  if (name == "-") return {BinOpKind::Sub, false};
  if (name == "/") return {BinOpKind::Div, false};
  fail("UnknownOperator", "no binary operator named '" + name + "'");
}

std::string BinOp::name() const {
  switch (kind) {
    case BinOpKind::Add: return "+";
    case BinOpKind::Sub: return "-";
    case BinOpKind::Mul: return "*";
    case BinOpKind::Div: return "/";
    case BinOpKind::Min: return "min";
    case BinOpKind::Max: return "max";
  }
  return "?";
}

void BinOp::apply_comp(ScalarValue::Comp& acc, const ScalarValue::Comp& v) const {
  if (acc.type != v.type)
    fail("MixedTypes", "binary operator over mixed scalar types");
  if (acc.type == ScalarType::Int64) {
    switch (kind) {
      case BinOpKind::Add: acc.i += v.i; break;
      case BinOpKind::Sub: acc.i -= v.i; break;
      case BinOpKind::Mul: acc.i *= v.i; break;
      case BinOpKind::Div:
        if (v.i == 0) fail("DivisionByZero", "integer division by zero");
        acc.i /= v.i;
        break;
      case BinOpKind::Min: acc.i = std::min(acc.i, v.i); break;
      case BinOpKind::Max: acc.i = std::max(acc.i, v.i); break;
    }
  } else {
    switch (kind) {
      case BinOpKind::Add: acc.f += v.f; break;
      case BinOpKind::Sub: acc.f -= v.f; break;
      case BinOpKind::Mul: acc.f *= v.f; break;
      case BinOpKind::Div: acc.f /= v.f; break;
      case BinOpKind::Min: acc.f = std::min(acc.f, v.f); break;
      case BinOpKind::Max: acc.f = std::max(acc.f, v.f); break;
    }
  }
}

ScalarValue BinOp::apply(const ScalarValue& a, const ScalarValue& b) const {
  if (a.comps.size() != b.comps.size())
    fail("MixedTypes", "binary operator over tuples of different arity");
  ScalarValue r = a;
  for (size_t c = 0; c < r.comps.size(); ++c) apply_comp(r.comps[c], b.comps[c]);
  return r;
}

std::string CombineOpSpec::to_string() const {
  switch (kind) {
    case CombineKind::Concat: return "cc";
    case CombineKind::PointWise: return "pw:" + binop->name();
    case CombineKind::PrefixSum: return "ps:" + binop->name();
  }
  return "?";
}

static void check_dim(const MdaView& m, int dim) {
  if (dim < 1 || dim > m.dim_count())
    fail("DimOutOfRange", "dimension index out of range");
}

static bool other_ranges_equal(const MdaView& a, const MdaView& b, int dim) {
  if (a.dim_count() != b.dim_count()) return false;
  for (int d = 0; d < a.dim_count(); ++d)
    if (d != dim - 1 && !(a.ranges[d] == b.ranges[d])) return false;
  return true;
}

MdaView concat(const MdaView& lhs, const MdaView& rhs, int dim) {
  check_dim(lhs, dim);
  if (!other_ranges_equal(lhs, rhs, dim))
    fail("NonMatchingRanges", "concat operands differ outside the concatenation dimension");
  IndexRange la = lhs.ranges[dim - 1], rb = rhs.ranges[dim - 1];
  if (!la.empty() && !rb.empty() && la.lo < rb.hi && rb.lo < la.hi)
    fail("OverlappingDimRanges", "concat operands overlap in the concatenation dimension");

  MdaView out;
  out.ranges = lhs.ranges;
  if (la.empty() && rb.empty()) {
    out.ranges[dim - 1] = la;
  } else if (la.empty()) {
    out.ranges[dim - 1] = rb;
  } else if (rb.empty()) {
    out.ranges[dim - 1] = la;
  } else {
    out.ranges[dim - 1] = {std::min(la.lo, rb.lo), std::max(la.hi, rb.hi)};
  }
  auto lf = lhs.elem;
  auto rf = rhs.elem;
  int d0 = dim - 1;
  out.elem = [lf, rf, la, rb, d0](const std::vector<int64_t>& idx) {
    if (la.contains(idx[d0])) return lf(idx);
    if (rb.contains(idx[d0])) return rf(idx);
    fail("GapCellRead", "index in concat hull owned by neither operand");
  };
  return out;
}

std::pair<MdaView, MdaView> concat_inverse(const MdaView& mda, int dim,
                                           std::pair<IndexRange, IndexRange> split_ranges) {
  check_dim(mda, dim);
  const IndexRange parent = mda.ranges[dim - 1];
  const IndexRange a = split_ranges.first, b = split_ranges.second;
  bool adjacent_cover = (a.lo == parent.lo && a.hi == b.lo && b.hi == parent.hi) ||
                        (b.lo == parent.lo && b.hi == a.lo && a.hi == parent.hi) ||
                        (a.empty() && b == parent) || (b.empty() && a == parent) ||
                        (a.empty() && b.empty() && parent.empty());
  if (!adjacent_cover)
    fail("RangesNotAPartition", "split ranges do not partition the parent range");
  return {restrict_dim(mda, dim, a), restrict_dim(mda, dim, b)};
}

MdaView pointwise(const BinOp& binop, const MdaView& lhs, const MdaView& rhs, int dim) {
  check_dim(lhs, dim);
  const IndexRange zero{0, 1};
  if (!(lhs.ranges[dim - 1] == zero) || !(rhs.ranges[dim - 1] == zero))
    fail("DimNotCollapsed", "point-wise operands must have range [0,1) at the combine dimension");
  if (!other_ranges_equal(lhs, rhs, dim))
    fail("RangeMismatch", "point-wise operands differ outside the combine dimension");
  MdaView out;
  out.ranges = lhs.ranges;
  auto lf = lhs.elem;
  auto rf = rhs.elem;
  out.elem = [binop, lf, rf](const std::vector<int64_t>& idx) {
    return binop.apply(lf(idx), rf(idx));
  };
  return out;
}

MdaView prefix_sum_combine(const BinOp& binop, const MdaView& lhs, const MdaView& rhs,
                           int dim, PsBoundary boundary) {
  check_dim(lhs, dim);
  if (!other_ranges_equal(lhs, rhs, dim))
    fail("NonMatchingRanges", "prefix-sum operands differ outside the combine dimension");
  IndexRange la = lhs.ranges[dim - 1], rb = rhs.ranges[dim - 1];
  if (!la.empty() && !rb.empty() && la.hi > rb.lo)
    fail("RangesNotOrdered", "prefix-sum lhs range must strictly precede rhs range");
  if (!la.empty() && (boundary.lhs_max_index != la.hi - 1 || boundary.min_context != la.lo))
    fail("BoundaryMismatch", "prefix-sum boundary disagrees with lhs range");

  if (la.empty()) return rhs;
  if (rb.empty()) return lhs;

  MdaView out;
  out.ranges = lhs.ranges;
  out.ranges[dim - 1] = {la.lo, rb.hi};
  auto lf = lhs.elem;
  auto rf = rhs.elem;
  int d0 = dim - 1;
  int64_t ctx = boundary.lhs_max_index;
  out.elem = [binop, lf, rf, la, rb, d0, ctx](const std::vector<int64_t>& idx) {
    if (la.contains(idx[d0])) return lf(idx);
    if (!rb.contains(idx[d0]))
      fail("GapCellRead", "index in prefix-sum hull owned by neither operand");
    std::vector<int64_t> at_ctx = idx;
    at_ctx[d0] = ctx;
    return binop.apply(lf(at_ctx), rf(idx));
  };
  return out;
}

MdaView mda_from_buffer(std::shared_ptr<Buffer> buf) {
  MdaView m;
  for (int64_t n : buf->dims) m.ranges.push_back({0, n});
  m.elem = [buf](const std::vector<int64_t>& idx) {
    if (!buf->is_defined(idx)) fail("UndefinedCellRead", "read of undefined buffer cell");
    auto c = buf->get(idx);
    ScalarValue v;
    v.comps.push_back(c);
    return v;
  };
  return m;
}

MdaView restrict_dim(const MdaView& m, int dim, IndexRange r) {
  check_dim(m, dim);
  MdaView out = m;
  out.ranges[dim - 1] = r;
  return out;
}

MdaView reindex_dim_to_zero(const MdaView& m, int dim) {
  check_dim(m, dim);
  const IndexRange src = m.ranges[dim - 1];
  if (src.size() != 1)
    fail("DimNotCollapsed", "reindex-to-zero requires a singleton range");
  MdaView out;
  out.ranges = m.ranges;
  out.ranges[dim - 1] = {0, 1};
  auto f = m.elem;
  int d0 = dim - 1;
  int64_t at = src.lo;
  out.elem = [f, d0, at](const std::vector<int64_t>& idx) {
    std::vector<int64_t> j = idx;
    j[d0] = at;
    return f(j);
  };
  return out;
}

void for_each_index(const std::vector<IndexRange>& ranges,
                    const std::function<void(const std::vector<int64_t>&)>& fn) {
  std::vector<int64_t> idx(ranges.size());
  for (const auto& r : ranges)
    if (r.empty()) return;
  for (size_t d = 0; d < ranges.size(); ++d) idx[d] = ranges[d].lo;
  while (true) {
    fn(idx);
    size_t d = ranges.size();
    while (d > 0) {
      --d;
      if (++idx[d] < ranges[d].hi) break;
      idx[d] = ranges[d].lo;
      if (d == 0) return;
    }
    if (ranges.empty()) return;
  }
}

MdaView materialize(const MdaView& m) {
  auto cells = std::make_shared<std::vector<ScalarValue>>();
  cells->reserve(static_cast<size_t>(m.cell_count()));
  std::vector<int64_t> extents;
  for (const auto& r : m.ranges) extents.push_back(r.size());
  for_each_index(m.ranges, [&](const std::vector<int64_t>& idx) { cells->push_back(m.elem(idx)); });
  MdaView out;
  out.ranges = m.ranges;
  auto ranges = m.ranges;
  out.elem = [cells, ranges, extents](const std::vector<int64_t>& idx) {
    int64_t flat = 0;
    for (size_t d = 0; d < ranges.size(); ++d) flat = flat * extents[d] + (idx[d] - ranges[d].lo);
    return (*cells)[static_cast<size_t>(flat)];
  };
  return out;
}

bool mda_equal(const MdaView& a, const MdaView& b, double rel_tol) {
  if (a.ranges.size() != b.ranges.size()) return false;
  for (size_t d = 0; d < a.ranges.size(); ++d)
    if (!(a.ranges[d] == b.ranges[d])) return false;
  bool ok = true;
  for_each_index(a.ranges, [&](const std::vector<int64_t>& idx) {
    if (!ok) return;
    ScalarValue va = a.elem(idx), vb = b.elem(idx);
    if (va.comps.size() != vb.comps.size()) {
      ok = false;
      return;
    }
    for (size_t c = 0; c < va.comps.size(); ++c) {
      if (va.comps[c].type != vb.comps[c].type) {
        ok = false;
        return;
      }
      if (va.comps[c].type == ScalarType::Int64) {
        if (va.comps[c].i != vb.comps[c].i) ok = false;
      } else if (!nearly_equal(va.comps[c].f, vb.comps[c].f, rel_tol)) {
        ok = false;
      }
    }
  });
  return ok;
}

} // namespace mdh
