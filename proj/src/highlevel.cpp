#include "mdh/highlevel.hpp"

#include "engine.hpp"
#include "mdh/error.hpp"

namespace mdh {

std::vector<IndexRange> HighLevelExpr::full_ranges() const {
  std::vector<IndexRange> r;
  r.reserve(sizes.size());
  for (int64_t n : sizes) r.push_back({0, n});
  return r;
}

void HighLevelExpr::validate_structure() const {
  int D = dim_count();
  if (D == 0) fail("DimOutOfRange", "computation '" + name + "' has no dimensions");
  for (int d = 0; d < D; ++d)
    if (sizes[static_cast<size_t>(d)] < 1)
      fail("OutOfRange", "dimension " + std::to_string(d + 1) + " of '" + name + "' has non-positive size");
  if (static_cast<int>(combine.size()) != D)
    fail("DimOutOfRange", "'" + name + "' declares " + std::to_string(combine.size()) + " combine operators for " +
                              std::to_string(D) + " dimensions");
  if (static_cast<int>(dim_names.size()) != D)
    fail("DimOutOfRange", "'" + name + "' dimension name count mismatch");
  for (auto& op : combine)
    if (op.kind != CombineKind::Concat && !op.binop)
      fail("UnknownOperator", "'" + name + "' has a combine operator without a binary operator");

  auto check_view = [&](const ViewSpec& v, const char* which) {
    if (v.buffers.empty()) fail("IndexOutOfBounds", std::string("'") + name + "' has no " + which + " buffers");
    for (auto& b : v.buffers) {
      if (b.rank < 1) fail("DimOutOfRange", "buffer '" + b.name + "' has rank " + std::to_string(b.rank));
      if (b.accesses.empty()) fail("IndexOutOfBounds", "buffer '" + b.name + "' has no accesses");
      for (auto& a : b.accesses) {
        if (static_cast<int>(a.idx.size()) != b.rank)
          fail("DimOutOfRange", "buffer '" + b.name + "' access '" + a.to_string() + "' arity does not match rank");
        for (auto& af : a.idx)
          if (static_cast<int>(af.coeff.size()) != D)
            fail("DimOutOfRange", "buffer '" + b.name + "' index expression over wrong dimension count");
      }
    }
  };
  check_view(input_view, "input");
  check_view(output_view, "output");

  ScalarTypeContext ctx;
  for (auto& b : input_view.buffers) {
    ctx.in_types.push_back(b.type);
    ctx.in_access_counts.push_back(static_cast<int>(b.accesses.size()));
  }
  for (auto& b : output_view.buffers) {
    ctx.out_types.push_back(b.type);
    ctx.out_access_counts.push_back(static_cast<int>(b.accesses.size()));
  }
  ctx.dim_count = D;
  ScalarExpr copy = scalar;
  copy.typecheck(ctx);
}

std::vector<IndexRange> collapsed_ranges(const HighLevelExpr& e) {
  return collapsed_ranges(e, e.full_ranges());
}

std::vector<IndexRange> collapsed_ranges(const HighLevelExpr& e, const std::vector<IndexRange>& ranges) {
  std::vector<IndexRange> out = ranges;
  for (size_t d = 0; d < out.size(); ++d)
    if (e.combine[d].kind == CombineKind::PointWise) out[d] = {0, 1};
  return out;
}

ValidationReport validate_md_hom(const HighLevelExpr& e) {
  ValidationReport rep;
  int first = 0; // first dim (1-based) carrying a fold operator
  for (int d = 1; d <= e.dim_count(); ++d) {
    const CombineOpSpec& op = e.combine[static_cast<size_t>(d - 1)];
    if (op.kind == CombineKind::Concat) continue;
    if (!op.binop || !op.binop->declared_assoc_comm) {
      rep.ok = false;
      rep.violations.push_back({"MixedIncompatibleOperators",
                                "dimension " + std::to_string(d) + " folds with '" +
                                    (op.binop ? op.binop->name() : std::string("?")) +
                                    "', which is not associative and commutative",
                                d, d});
      continue;
    }
    if (first == 0) {
      first = d;
      continue;
    }
    const CombineOpSpec& ref = e.combine[static_cast<size_t>(first - 1)];
    if (ref.binop && ref.binop->kind != op.binop->kind) {
      rep.ok = false;
      rep.violations.push_back({"MixedIncompatibleOperators",
                                "dimensions " + std::to_string(first) + " and " + std::to_string(d) +
                                    " fold with different operators ('" + ref.binop->name() + "' vs '" +
                                    op.binop->name() + "')",
                                first, d});
    }
  }
  return rep;
}

std::optional<BinOp> shared_fold_op(const HighLevelExpr& e) {
  for (auto& op : e.combine)
    if (op.kind != CombineKind::Concat) return op.binop;
  return std::nullopt;
}

std::vector<std::shared_ptr<Buffer>> reference_execute(const HighLevelExpr& e,
                                                       const std::vector<std::shared_ptr<Buffer>>& inputs) {
  return engine::run(e, inputs, engine::lex_plan(e.sizes));
}

MdaView apply_md_hom(const HighLevelExpr& e, const MdaView& input, const std::vector<IndexRange>& ranges) {
  ValidationReport rep = validate_md_hom(e);
  if (!rep.ok) fail("MixedIncompatibleOperators", rep.violations.front().message);
  std::optional<BinOp> fold = shared_fold_op(e);

  std::vector<IndexRange> res_ranges = ranges;
  for (size_t d = 0; d < res_ranges.size(); ++d)
    if (e.combine[d].kind == CombineKind::PointWise) res_ranges[d] = {0, 1};

  ScalarExpr f = e.scalar; // typed copy
  ScalarTypeContext ctx;
  for (auto& b : e.input_view.buffers) {
    ctx.in_types.push_back(b.type);
    ctx.in_access_counts.push_back(static_cast<int>(b.accesses.size()));
  }
  for (auto& b : e.output_view.buffers) {
    ctx.out_types.push_back(b.type);
    ctx.out_access_counts.push_back(static_cast<int>(b.accesses.size()));
  }
  ctx.dim_count = e.dim_count();
  f.typecheck(ctx);

  auto apply_f = [&, f](const std::vector<int64_t>& i) {
    ScalarValue cell = input.elem(i);
    ScalarEvalEnv env;
    env.in = [&](int buf, int acc) {
      return cell.comps[static_cast<size_t>(e.input_view.comp_offset(buf, acc))];
    };
    env.idx = [&](int dim) { return i[static_cast<size_t>(dim - 1)]; };
    return eval_scalar(f, env);
  };

  // Result cell (r): fold of f over the fiber where pw dims sweep their full
  // range, ps dims run [lo, r_d], cc dims stay fixed; ascending order.
  MdaView result;
  result.ranges = res_ranges;
  int D = e.dim_count();
  result.elem = [&, apply_f, fold, ranges, D](const std::vector<int64_t>& r) {
    std::vector<IndexRange> fiber(static_cast<size_t>(D));
    for (int d = 0; d < D; ++d) {
      switch (e.combine[static_cast<size_t>(d)].kind) {
        case CombineKind::Concat: fiber[static_cast<size_t>(d)] = {r[static_cast<size_t>(d)], r[static_cast<size_t>(d)] + 1}; break;
        case CombineKind::PointWise: fiber[static_cast<size_t>(d)] = ranges[static_cast<size_t>(d)]; break;
        case CombineKind::PrefixSum: fiber[static_cast<size_t>(d)] = {ranges[static_cast<size_t>(d)].lo, r[static_cast<size_t>(d)] + 1}; break;
      }
    }
    ScalarValue acc;
    bool have = false;
    for_each_index(fiber, [&](const std::vector<int64_t>& i) {
      ScalarValue v = apply_f(i);
      if (!have) {
        acc = std::move(v);
        have = true;
      } else {
        acc = fold->apply(acc, v);
      }
    });
    if (!have) fail("OutOfRange", "md_hom applied over an empty fiber");
    return acc;
  };
  return materialize(result);
}

} // namespace mdh
