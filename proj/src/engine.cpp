#include "engine.hpp"

#include <cmath>

#include "mdh/error.hpp"

namespace mdh::engine {
namespace {

enum class Op : uint8_t {
  LitI, LitF, InI, InF, Idx,
  AddI, AddF, SubI, SubF, MulI, MulF, DivI, DivF,
  MinI, MinF, MaxI, MaxF, AbsI, AbsF, CmpI, CmpF, Select
};

struct Instr {
  Op op;
  int32_t arg = 0;
  int64_t ilit = 0;
  double flit = 0.0;
};

union Slot {
  int64_t i;
  double f;
};

struct Program {
  std::vector<Instr> code;
  int max_depth = 0;
  ScalarType result = ScalarType::Int64;
};

int compile_node(const ExprNode& e, std::vector<Instr>& out, const ViewSpec& in_view) {
  auto is_f = [](const ExprNode& n) { return n.type == ScalarType::Float64; };
  switch (e.kind) {
    case ExprKind::Lit:
      out.push_back(is_f(e) ? Instr{Op::LitF, 0, 0, e.fval} : Instr{Op::LitI, 0, e.ival, 0.0});
      return 1;
    case ExprKind::In:
      out.push_back({is_f(e) ? Op::InF : Op::InI, in_view.comp_offset(e.buf, e.acc), 0, 0.0});
      return 1;
    case ExprKind::Idx:
      out.push_back({Op::Idx, e.dim - 1, 0, 0.0});
      return 1;
    case ExprKind::Abs: {
      int d = compile_node(e.args[0], out, in_view);
      out.push_back({is_f(e) ? Op::AbsF : Op::AbsI, 0, 0, 0.0});
      return d;
    }
    case ExprKind::Cmp: {
      int d1 = compile_node(e.args[0], out, in_view);
      int d2 = compile_node(e.args[1], out, in_view);
      out.push_back({is_f(e.args[0]) ? Op::CmpF : Op::CmpI, 0, 0, 0.0});
      return std::max(d1, 1 + d2);
    }
    case ExprKind::Select: {
      int d1 = compile_node(e.args[0], out, in_view);
      int d2 = compile_node(e.args[1], out, in_view);
      int d3 = compile_node(e.args[2], out, in_view);
      out.push_back({Op::Select, 0, 0, 0.0});
      return std::max({d1, 1 + d2, 2 + d3});
    }
    default: {
      int d1 = compile_node(e.args[0], out, in_view);
      int d2 = compile_node(e.args[1], out, in_view);
      Op op;
      bool f = is_f(e);
      switch (e.kind) {
        case ExprKind::Add: op = f ? Op::AddF : Op::AddI; break;
        case ExprKind::Sub: op = f ? Op::SubF : Op::SubI; break;
        case ExprKind::Mul: op = f ? Op::MulF : Op::MulI; break;
        case ExprKind::Div: op = f ? Op::DivF : Op::DivI; break;
        case ExprKind::Min: op = f ? Op::MinF : Op::MinI; break;
        default: op = f ? Op::MaxF : Op::MaxI; break;
      }
      out.push_back({op, 0, 0, 0.0});
      return std::max(d1, 1 + d2);
    }
  }
}

struct AccessPlan {
  const ScalarValue::Comp* data = nullptr;
  const uint8_t* defined = nullptr;
  const char* buf_name = nullptr;
  int64_t c0 = 0;              // flat offset at index origin
  std::vector<int64_t> cj;     // flat step per MDA dimension
  int64_t off = 0;             // current flat offset
};

struct FoldOp {
  BinOpKind kind = BinOpKind::Add;
  void fold_i(int64_t& acc, int64_t v) const {
    switch (kind) {
      case BinOpKind::Add: acc += v; break;
      case BinOpKind::Mul: acc *= v; break;
      case BinOpKind::Min: acc = v < acc ? v : acc; break;
      case BinOpKind::Max: acc = v > acc ? v : acc; break;
      default: fail("UnknownOperator", "fold with a non-commutative operator");
    }
  }
  void fold_f(double& acc, double v) const {
    switch (kind) {
      case BinOpKind::Add: acc += v; break;
      case BinOpKind::Mul: acc *= v; break;
      case BinOpKind::Min: acc = v < acc ? v : acc; break;
      case BinOpKind::Max: acc = v > acc ? v : acc; break;
      default: fail("UnknownOperator", "fold with a non-commutative operator");
    }
  }
};

struct Executor {
  const HighLevelExpr& e;
  const Plan& plan;

  std::vector<AccessPlan> accesses;    // input (buf, acc) flat order
  std::vector<Program> programs;       // one per output component
  std::vector<Slot> stack;

  int64_t acc_cells = 0;
  std::vector<int64_t> acc_stride;     // per dim; 0 on point-wise dims
  std::vector<std::vector<int64_t>> acc_i;
  std::vector<std::vector<double>> acc_f;
  std::vector<uint8_t> acc_def;
  int64_t acc_off = 0;
  FoldOp fold;

  std::vector<int64_t> i; // current index

  explicit Executor(const HighLevelExpr& expr, const Plan& p) : e(expr), plan(p) {}

  void leaf() {
    for (size_t c = 0; c < programs.size(); ++c) {
      const Program& prog = programs[c];
      size_t sp = 0;
      for (const Instr& ins : prog.code) {
        switch (ins.op) {
          case Op::LitI: stack[sp++].i = ins.ilit; break;
          case Op::LitF: stack[sp++].f = ins.flit; break;
          case Op::InI:
          case Op::InF: {
            const AccessPlan& ap = accesses[static_cast<size_t>(ins.arg)];
            if (!ap.defined[ap.off])
              fail("UndefinedCellRead", std::string("buffer '") + ap.buf_name + "' read at an unwritten cell");
            if (ins.op == Op::InI)
              stack[sp++].i = ap.data[ap.off].i;
            else
              stack[sp++].f = ap.data[ap.off].f;
            break;
          }
          case Op::Idx: stack[sp++].i = i[static_cast<size_t>(ins.arg)]; break;
          case Op::AddI: --sp; stack[sp - 1].i += stack[sp].i; break;
          case Op::AddF: --sp; stack[sp - 1].f += stack[sp].f; break;
          case Op::SubI: --sp; stack[sp - 1].i -= stack[sp].i; break;
          case Op::SubF: --sp; stack[sp - 1].f -= stack[sp].f; break;
          case Op::MulI: --sp; stack[sp - 1].i *= stack[sp].i; break;
          case Op::MulF: --sp; stack[sp - 1].f *= stack[sp].f; break;
          case Op::DivI:
            --sp;
            if (stack[sp].i == 0) fail("DivisionByZero", "integer division by zero in scalar function");
            stack[sp - 1].i /= stack[sp].i;
            break;
          case Op::DivF: --sp; stack[sp - 1].f /= stack[sp].f; break;
          case Op::MinI: --sp; stack[sp - 1].i = std::min(stack[sp - 1].i, stack[sp].i); break;
          case Op::MinF: --sp; stack[sp - 1].f = std::min(stack[sp - 1].f, stack[sp].f); break;
          case Op::MaxI: --sp; stack[sp - 1].i = std::max(stack[sp - 1].i, stack[sp].i); break;
          case Op::MaxF: --sp; stack[sp - 1].f = std::max(stack[sp - 1].f, stack[sp].f); break;
          case Op::AbsI: stack[sp - 1].i = stack[sp - 1].i < 0 ? -stack[sp - 1].i : stack[sp - 1].i; break;
          case Op::AbsF: stack[sp - 1].f = std::fabs(stack[sp - 1].f); break;
          case Op::CmpI: --sp; stack[sp - 1].i = stack[sp - 1].i < stack[sp].i ? -1 : (stack[sp - 1].i > stack[sp].i ? 1 : 0); break;
          case Op::CmpF: --sp; stack[sp - 1].i = stack[sp - 1].f < stack[sp].f ? -1 : (stack[sp - 1].f > stack[sp].f ? 1 : 0); break;
          case Op::Select: sp -= 2; stack[sp - 1] = stack[sp - 1].i != 0 ? stack[sp] : stack[sp + 1]; break;
        }
      }
      if (acc_def[acc_off]) {
        if (prog.result == ScalarType::Int64)
          fold.fold_i(acc_i[c][static_cast<size_t>(acc_off)], stack[0].i);
        else
          fold.fold_f(acc_f[c][static_cast<size_t>(acc_off)], stack[0].f);
      } else {
        if (prog.result == ScalarType::Int64)
          acc_i[c][static_cast<size_t>(acc_off)] = stack[0].i;
        else
          acc_f[c][static_cast<size_t>(acc_off)] = stack[0].f;
      }
    }
    acc_def[acc_off] = 1;
  }

  void step(const LoopStep& L, int64_t delta) {
    i[static_cast<size_t>(L.dim - 1)] += delta;
    acc_off += acc_stride[static_cast<size_t>(L.dim - 1)] * delta;
    for (auto& ap : accesses) ap.off += ap.cj[static_cast<size_t>(L.dim - 1)] * delta;
  }

  void walk(size_t lvl) {
    if (lvl == plan.loops.size()) {
      leaf();
      return;
    }
    const LoopStep& L = plan.loops[lvl];
    for (int64_t p = 0;;) {
      walk(lvl + 1);
      if (++p == L.count) break;
      step(L, L.stride);
    }
    step(L, -(L.count - 1) * L.stride);
  }
};

} // namespace

Plan lex_plan(const std::vector<int64_t>& sizes) {
  Plan p;
  for (size_t d = 0; d < sizes.size(); ++d)
    p.loops.push_back({static_cast<int>(d + 1), sizes[d], 1});
  return p;
}

std::vector<std::shared_ptr<Buffer>> run(const HighLevelExpr& e,
                                         const std::vector<std::shared_ptr<Buffer>>& inputs,
                                         const Plan& plan) {
  e.validate_structure();
  ValidationReport rep = validate_md_hom(e);
  if (!rep.ok) fail("MixedIncompatibleOperators", rep.violations.front().message);

  int D = e.dim_count();
  std::vector<IndexRange> ranges = e.full_ranges();

  // The nest must cover each dimension's full extent exactly once.
  {
    std::vector<int64_t> prod(static_cast<size_t>(D), 1);
    for (auto& L : plan.loops) {
      if (L.dim < 1 || L.dim > D) fail("InvalidConfig", "nest loop over dimension " + std::to_string(L.dim));
      prod[static_cast<size_t>(L.dim - 1)] *= L.count;
    }
    for (int d = 0; d < D; ++d)
      if (prod[static_cast<size_t>(d)] != e.sizes[static_cast<size_t>(d)])
        fail("InvalidConfig", "nest loop counts over dimension " + std::to_string(d + 1) +
                                  " cover " + std::to_string(prod[static_cast<size_t>(d)]) + " of " +
                                  std::to_string(e.sizes[static_cast<size_t>(d)]) + " indices");
  }

  // Input buffers: shape, type and extent checks once, flat access afterwards.
  if (inputs.size() != e.input_view.buffers.size())
    fail("BufferTooSmall", "expected " + std::to_string(e.input_view.buffers.size()) + " input buffers, got " +
                               std::to_string(inputs.size()));
  std::vector<std::vector<int64_t>> need = infer_buffer_sizes(e.input_view, ranges);
  for (size_t b = 0; b < inputs.size(); ++b) {
    const ViewBuffer& vb = e.input_view.buffers[b];
    if (!inputs[b]) fail("BufferTooSmall", "missing input buffer '" + vb.name + "'");
    if (static_cast<int>(inputs[b]->dims.size()) != vb.rank)
      fail("BufferTooSmall", "input buffer '" + vb.name + "' rank mismatch");
    if (inputs[b]->elem_type != vb.type) fail("MixedTypes", "input buffer '" + vb.name + "' element type mismatch");
    for (int r = 0; r < vb.rank; ++r)
      if (inputs[b]->dims[static_cast<size_t>(r)] < need[b][static_cast<size_t>(r)])
        fail("BufferTooSmall", "input buffer '" + vb.name + "' extent " +
                                   std::to_string(inputs[b]->dims[static_cast<size_t>(r)]) + " < required " +
                                   std::to_string(need[b][static_cast<size_t>(r)]));
  }

  Executor ex(e, plan);

  for (size_t b = 0; b < e.input_view.buffers.size(); ++b) {
    const ViewBuffer& vb = e.input_view.buffers[b];
    const Buffer& buf = *inputs[b];
    std::vector<int64_t> strides(static_cast<size_t>(vb.rank), 1);
    for (int r = vb.rank - 2; r >= 0; --r)
      strides[static_cast<size_t>(r)] = strides[static_cast<size_t>(r + 1)] * buf.dims[static_cast<size_t>(r + 1)];
    for (auto& acc : vb.accesses) {
      AccessPlan ap;
      ap.data = buf.data.data();
      ap.defined = buf.defined.data();
      ap.buf_name = vb.name.c_str();
      ap.cj.assign(static_cast<size_t>(D), 0);
      for (int r = 0; r < vb.rank; ++r) {
        ap.c0 += strides[static_cast<size_t>(r)] * acc.idx[static_cast<size_t>(r)].c0;
        for (int d = 0; d < D; ++d)
          ap.cj[static_cast<size_t>(d)] += strides[static_cast<size_t>(r)] * acc.idx[static_cast<size_t>(r)].coeff[static_cast<size_t>(d)];
      }
      ap.off = ap.c0;
      ex.accesses.push_back(std::move(ap));
    }
  }

  // Typed scalar programs, one per output component in (buf, acc) order.
  ScalarExpr f = e.scalar;
  {
    ScalarTypeContext ctx;
    for (auto& b : e.input_view.buffers) {
      ctx.in_types.push_back(b.type);
      ctx.in_access_counts.push_back(static_cast<int>(b.accesses.size()));
    }
    for (auto& b : e.output_view.buffers) {
      ctx.out_types.push_back(b.type);
      ctx.out_access_counts.push_back(static_cast<int>(b.accesses.size()));
    }
    ctx.dim_count = D;
    f.typecheck(ctx);
  }
  int max_depth = 1;
  for (auto& a : f.assigns) {
    Program p;
    p.max_depth = compile_node(a.expr, p.code, e.input_view);
    p.result = a.expr.type;
    max_depth = std::max(max_depth, p.max_depth);
    ex.programs.push_back(std::move(p));
  }
  ex.stack.resize(static_cast<size_t>(max_depth));

  // Accumulator over the combined result's index sets.
  std::vector<IndexRange> coll = collapsed_ranges(e);
  ex.acc_stride.assign(static_cast<size_t>(D), 0);
  ex.acc_cells = 1;
  for (int d = D - 1; d >= 0; --d) {
    if (e.combine[static_cast<size_t>(d)].kind != CombineKind::PointWise) {
      ex.acc_stride[static_cast<size_t>(d)] = ex.acc_cells;
      ex.acc_cells *= coll[static_cast<size_t>(d)].size();
    }
  }
  ex.acc_i.assign(ex.programs.size(), {});
  ex.acc_f.assign(ex.programs.size(), {});
  for (size_t c = 0; c < ex.programs.size(); ++c) {
    if (ex.programs[c].result == ScalarType::Int64)
      ex.acc_i[c].assign(static_cast<size_t>(ex.acc_cells), 0);
    else
      ex.acc_f[c].assign(static_cast<size_t>(ex.acc_cells), 0.0);
  }
  ex.acc_def.assign(static_cast<size_t>(ex.acc_cells), 0);
  ex.i.assign(static_cast<size_t>(D), 0);
  if (auto op = shared_fold_op(e)) ex.fold.kind = op->kind;

  if (ex.acc_cells > 0) ex.walk(0);

  // Prefix dimensions: in-place ascending scans over the accumulator.
  for (int d = 0; d < D; ++d) {
    if (e.combine[static_cast<size_t>(d)].kind != CombineKind::PrefixSum) continue;
    int64_t stride = ex.acc_stride[static_cast<size_t>(d)];
    int64_t extent = coll[static_cast<size_t>(d)].size();
    for (int64_t flat = 0; flat < ex.acc_cells; ++flat) {
      int64_t coord = (flat / stride) % extent;
      if (coord == 0) continue;
      if (!ex.acc_def[static_cast<size_t>(flat)] || !ex.acc_def[static_cast<size_t>(flat - stride)]) continue;
      for (size_t c = 0; c < ex.programs.size(); ++c) {
        if (ex.programs[c].result == ScalarType::Int64)
          ex.fold.fold_i(ex.acc_i[c][static_cast<size_t>(flat)], ex.acc_i[c][static_cast<size_t>(flat - stride)]);
        else
          ex.fold.fold_f(ex.acc_f[c][static_cast<size_t>(flat)], ex.acc_f[c][static_cast<size_t>(flat - stride)]);
      }
    }
  }

  // Scatter through the output view.
  MdaView res;
  res.ranges = coll;
  res.elem = [&ex, D](const std::vector<int64_t>& r) {
    int64_t flat = 0;
    for (int d = 0; d < D; ++d) flat += ex.acc_stride[static_cast<size_t>(d)] * r[static_cast<size_t>(d)];
    ScalarValue v;
    v.is_tuple = ex.programs.size() > 1;
    v.comps.resize(ex.programs.size());
    for (size_t c = 0; c < ex.programs.size(); ++c) {
      ScalarValue::Comp& comp = v.comps[c];
      comp.type = ex.programs[c].result;
      if (comp.type == ScalarType::Int64)
        comp.i = ex.acc_i[c][static_cast<size_t>(flat)];
      else
        comp.f = ex.acc_f[c][static_cast<size_t>(flat)];
    }
    return v;
  };
  return apply_output_view(e.output_view, res);
}

} // namespace mdh::engine
