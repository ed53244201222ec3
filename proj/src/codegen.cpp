#include "mdh/codegen.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace mdh {

namespace {

const char* ctype(ScalarType t) { return t == ScalarType::Int64 ? "long long" : "double"; }

std::string lit_i64(int64_t v) { return std::to_string(v) + "LL"; }

std::string lit_f64(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("in") == std::string::npos)
    s += ".0";
  return s;
}

std::string dim_letter(int d) {
  switch (d) {
    case 1: return "x";
    case 2: return "y";
    case 3: return "z";
    default: return "d" + std::to_string(d);
  }
}

bool identity_perm(const std::vector<int>& p) {
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] != static_cast<int>(i) + 1) return false;
  return true;
}

int64_t prod(const std::vector<int64_t>& v) {
  return std::accumulate(v.begin(), v.end(), int64_t{1}, std::multiplies<int64_t>());
}

// coord' = (coord - min) / g; g == 0 marks a dimension no access varies over.
struct DimXf {
  int64_t min = 0;
  int64_t g = 1;
};

struct Stage {
  std::string cname;
  std::string region;
  std::vector<int> layout;
};

struct InPlan {
  std::string name;
  ScalarType type = ScalarType::Int64;
  std::vector<int64_t> orig_dims;
  std::vector<DimXf> xf;
  std::vector<int64_t> red_dims;
  std::vector<Stage> stages; // staging copies in order; empty: scalar reads the argument
};

struct OutPlan {
  std::string name;
  ScalarType type = ScalarType::Int64;
  std::vector<int64_t> dims;
  bool direct = true;          // accumulate straight into the output argument
  std::vector<int> acc_layout; // identity when direct
  std::string acc;             // array expression the ACC macros target
};

struct NestLevel {
  MdhLevel lv;
  bool core = false;
  int64_t parts = 1;
  std::string tag;
};

// Flat row-major index of an array whose k-th stored dimension is original
// dimension layout[k]; coords are per original dimension position.
std::string flat_index(const std::vector<std::string>& coords, const std::vector<int64_t>& dims,
                       const std::vector<int>& layout) {
  if (coords.empty()) return "0";
  std::vector<int64_t> strides(coords.size(), 1);
  for (size_t k = coords.size() - 1; k-- > 0;)
    strides[k] = strides[k + 1] * dims[static_cast<size_t>(layout[k + 1] - 1)];
  std::string s;
  for (size_t k = 0; k < coords.size(); ++k) {
    if (k) s += " + ";
    const std::string& c = coords[static_cast<size_t>(layout[k] - 1)];
    s += strides[k] == 1 ? c : c + " * " + std::to_string(strides[k]);
  }
  return "(" + s + ")";
}

// Affine index expression as C over the d_<name> variables. The transform
// rebases onto the reachable lattice; drop_dim zeroes collapsed dimensions.
std::string affine_c(const Affine& a, const std::vector<std::string>& dim_names, const DimXf& xf,
                     const std::vector<bool>& drop_dim) {
  if (xf.g == 0) return "0";
  std::vector<std::string> terms;
  int64_t c0 = (a.c0 - xf.min) / xf.g;
  for (size_t d = 0; d < a.coeff.size(); ++d) {
    if (drop_dim[d]) continue;
    int64_t c = a.coeff[d] / xf.g;
    if (c == 0) continue;
    std::string var = "(d_" + dim_names[d] + ")";
    if (c == 1)
      terms.push_back(var);
    else if (c == -1)
      terms.push_back("-" + var);
    else
      terms.push_back(std::to_string(c) + " * " + var);
  }
  if (c0 != 0 || terms.empty()) terms.insert(terms.begin(), std::to_string(c0));
  std::string s;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (i) s += " + ";
    s += terms[i];
  }
  return "(" + s + ")";
}

std::vector<bool> no_drop(int D) { return std::vector<bool>(static_cast<size_t>(D), false); }

// Full staging sequence of one input buffer: argument, de levels, scalar read.
std::vector<BufferStaging> input_chain(const LowLevelExpr& ll, const HighLevelExpr& expr, size_t b) {
  std::vector<BufferStaging> chain;
  std::vector<int> ident;
  for (int a = 1; a <= expr.input_view.buffers[b].rank; ++a) ident.push_back(a);
  chain.push_back({expr.input_view.buffers[b].name, ll.model.region_name(1), ident});
  for (size_t k = 1; k < ll.de_steps.size(); ++k) chain.push_back(ll.de_steps[k].staging[b]);
  chain.push_back(ll.scalar_step.in_staging[b]);
  return chain;
}

bool same_staging(const BufferStaging& a, const BufferStaging& b) {
  return a.region == b.region && a.layout == b.layout;
}

// Lattice rebase per buffer dimension: gcd of every access coefficient and
// every offset delta, and the least reachable coordinate.
std::vector<DimXf> input_xf(const HighLevelExpr& expr, size_t b) {
  const ViewBuffer& vb = expr.input_view.buffers[b];
  std::vector<IndexRange> full = expr.full_ranges();
  std::vector<DimXf> xf(static_cast<size_t>(vb.rank));
  for (int a = 0; a < vb.rank; ++a) {
    int64_t g = 0;
    int64_t mn = 0;
    bool first = true;
    for (const ViewAccess& acc : vb.accesses) {
      const Affine& af = acc.idx[static_cast<size_t>(a)];
      for (int64_t c : af.coeff) g = std::gcd(g, c < 0 ? -c : c);
      int64_t lo = af.min_over(full);
      if (first) {
        mn = lo;
        first = false;
      } else {
        mn = std::min(mn, lo);
      }
      int64_t delta = af.c0 - vb.accesses[0].idx[static_cast<size_t>(a)].c0;
      g = std::gcd(g, delta < 0 ? -delta : delta);
    }
    xf[static_cast<size_t>(a)] = {mn, g};
  }
  return xf;
}

std::vector<int64_t> reduced_dims(const std::vector<int64_t>& orig, const std::vector<DimXf>& xf) {
  std::vector<int64_t> red;
  for (size_t a = 0; a < orig.size(); ++a) {
    if (xf[a].g == 0) {
      red.push_back(1);
    } else {
      red.push_back((orig[a] - 1 - xf[a].min) / xf[a].g + 1);
    }
  }
  return red;
}

struct UsedOps {
  std::set<std::pair<ExprKind, ScalarType>> fn;
  void note(ExprKind k, ScalarType t) { fn.insert({k, t}); }
};

void scan_used(const ExprNode& e, UsedOps& used) {
  if (e.kind == ExprKind::Min || e.kind == ExprKind::Max || e.kind == ExprKind::Abs)
    used.note(e.kind, e.type);
  if (e.kind == ExprKind::Cmp) used.note(e.kind, e.args[0].type);
  for (const ExprNode& a : e.args) scan_used(a, used);
}

std::string type_suffix(ScalarType t) { return t == ScalarType::Int64 ? "i64" : "f64"; }

std::string expr_c(const ExprNode& e, const HighLevelExpr& expr) {
  auto bin = [&](const char* op) {
    return "(" + expr_c(e.args[0], expr) + " " + op + " " + expr_c(e.args[1], expr) + ")";
  };
  switch (e.kind) {
    case ExprKind::Lit:
      return e.type == ScalarType::Int64 ? lit_i64(e.ival) : lit_f64(e.float_lit ? e.fval : static_cast<double>(e.ival));
    case ExprKind::In:
      return "in_" + expr.input_view.buffers[static_cast<size_t>(e.buf - 1)].name + "_" +
             std::to_string(e.acc - 1);
    case ExprKind::Idx:
      return "d_" + expr.dim_names[static_cast<size_t>(e.dim - 1)];
    case ExprKind::Add: return bin("+");
    case ExprKind::Sub: return bin("-");
    case ExprKind::Mul: return bin("*");
    case ExprKind::Div: return bin("/");
    case ExprKind::Min:
      return "mdh_min_" + type_suffix(e.type) + "(" + expr_c(e.args[0], expr) + ", " +
             expr_c(e.args[1], expr) + ")";
    case ExprKind::Max:
      return "mdh_max_" + type_suffix(e.type) + "(" + expr_c(e.args[0], expr) + ", " +
             expr_c(e.args[1], expr) + ")";
    case ExprKind::Abs:
      return "mdh_abs_" + type_suffix(e.type) + "(" + expr_c(e.args[0], expr) + ")";
    case ExprKind::Cmp:
      return "mdh_cmp_" + type_suffix(e.args[0].type) + "(" + expr_c(e.args[0], expr) + ", " +
             expr_c(e.args[1], expr) + ")";
    case ExprKind::Select:
      return "((" + expr_c(e.args[0], expr) + ") != 0LL ? " + expr_c(e.args[1], expr) + " : " +
             expr_c(e.args[2], expr) + ")";
  }
  fail("UnsupportedScalarOp", "scalar operator cannot be emitted");
}

std::string fold_c(BinOpKind k, ScalarType t, const std::string& a, const std::string& b) {
  switch (k) {
    case BinOpKind::Add: return "(" + a + " + " + b + ")";
    case BinOpKind::Mul: return "(" + a + " * " + b + ")";
    case BinOpKind::Min: return "mdh_min_" + type_suffix(t) + "(" + a + ", " + b + ")";
    case BinOpKind::Max: return "mdh_max_" + type_suffix(t) + "(" + a + ", " + b + ")";
    default: fail("UnsupportedScalarOp", "combine operator cannot be emitted");
  }
}

std::string identity_c(BinOpKind k, ScalarType t) {
  bool i = t == ScalarType::Int64;
  switch (k) {
    case BinOpKind::Add: return i ? "0LL" : "0.0";
    case BinOpKind::Mul: return i ? "1LL" : "1.0";
    case BinOpKind::Min: return i ? "LLONG_MAX" : "INFINITY";
    case BinOpKind::Max: return i ? "LLONG_MIN" : "-INFINITY";
    default: fail("UnsupportedScalarOp", "combine operator cannot be emitted");
  }
}

ScalarTypeContext type_context(const HighLevelExpr& expr) {
  ScalarTypeContext ctx;
  for (const ViewBuffer& b : expr.input_view.buffers) {
    ctx.in_types.push_back(b.type);
    ctx.in_access_counts.push_back(static_cast<int>(b.accesses.size()));
  }
  for (const ViewBuffer& b : expr.output_view.buffers) {
    ctx.out_types.push_back(b.type);
    ctx.out_access_counts.push_back(static_cast<int>(b.accesses.size()));
  }
  ctx.dim_count = expr.dim_count();
  return ctx;
}

int64_t level_stride(const TuningConfig& cfg, const std::vector<int64_t>& sizes, const MdhLevel& lv) {
  int64_t cum = 1;
  for (int l = 1; l <= lv.layer; ++l)
    cum *= cfg.num_parts[static_cast<size_t>(l - 1)][static_cast<size_t>(lv.dim - 1)];
  return sizes[static_cast<size_t>(lv.dim - 1)] / cum;
}

std::vector<NestLevel> nest_levels(const LowLevelExpr& ll, const std::vector<MdhLevel>& ord,
                                   const std::vector<AsmLevel>& ass, int D) {
  std::vector<NestLevel> out;
  for (const MdhLevel& lv : ord) {
    const AsmLevel& a = ass[static_cast<size_t>(level_rank(lv, D))];
    NestLevel nl;
    nl.lv = lv;
    nl.core = level_kind(ll.model, a.layer) == LevelKind::Core;
    nl.parts = ll.config.parts(lv);
    nl.tag = "(" + ll.model.layer_name(a.layer) + "," + dim_letter(a.dim) + ")";
    out.push_back(nl);
  }
  return out;
}

std::string part_var(const MdhLevel& lv, const HighLevelExpr& expr) {
  return "p_" + std::to_string(lv.layer) + "_" + expr.dim_names[static_cast<size_t>(lv.dim - 1)];
}

// Writes one phase's loop nest and hands the body emitter the inner indent.
struct Nest {
  std::ostringstream& out;
  const HighLevelExpr& expr;
  const CodegenOptions& opt;
  int indent;
  std::vector<bool> braced;
  // Depth of the loop carrying the parallel pragma; nested core loops stay
  // serial so the nest opens exactly one parallel region.
  std::optional<size_t> parallel_depth;

  Nest(std::ostringstream& o, const HighLevelExpr& e, const CodegenOptions& op, int base)
      : out(o), expr(e), opt(op), indent(base) {}

  std::string pad() const { return std::string(static_cast<size_t>(indent) * 2, ' '); }

  void open(const NestLevel& nl, bool pragma) {
    std::string v = part_var(nl.lv, expr);
    out << pad() << "/* level (" << nl.lv.layer << "," << dim_letter(nl.lv.dim) << ") tag " << nl.tag
        << " */\n";
    if (nl.parts == 1 && opt.constant_substitution) {
      out << pad() << "const long long " << v << " = 0;\n";
      braced.push_back(false);
      return;
    }
    if (pragma && nl.core && !parallel_depth) {
      out << pad() << "#pragma omp parallel for schedule(static)\n";
      parallel_depth = braced.size();
    }
    out << pad() << "for (long long " << v << " = 0; " << v << " < " << nl.parts << "; ++" << v
        << ") {\n";
    braced.push_back(true);
    ++indent;
  }

  void line(const std::string& s) { out << pad() << s << "\n"; }

  void close_to(size_t depth) {
    while (braced.size() > depth) {
      if (braced.back()) {
        --indent;
        out << pad() << "}\n";
      }
      braced.pop_back();
    }
    if (parallel_depth && *parallel_depth >= braced.size()) parallel_depth.reset();
  }
};

void emit_dim_consts(Nest& n, const LowLevelExpr& ll, const HighLevelExpr& expr) {
  for (int d = 1; d <= expr.dim_count(); ++d) {
    std::string s;
    for (int l = 1; l <= ll.config.layer_count(); ++l) {
      MdhLevel lv{l, d};
      if (!s.empty()) s += " + ";
      int64_t stride = level_stride(ll.config, expr.sizes, lv);
      s += part_var(lv, expr);
      if (stride != 1) s += " * " + std::to_string(stride);
    }
    n.line("const long long d_" + expr.dim_names[static_cast<size_t>(d - 1)] + " = " + s + ";");
  }
}

} // namespace

OptimizeReport optimize(const LowLevelExpr& ll, const HighLevelExpr& expr) {
  const TuningConfig& cfg = ll.config;
  const int D = expr.dim_count();
  OptimizeReport rep;

  size_t n = cfg.ord_de.size();
  for (size_t i = 0; i < n; ++i) {
    if (!(cfg.ord_de[i] == cfg.ord_scalar[i] && cfg.ord_de[i] == cfg.ord_re[i])) break;
    int r = level_rank(cfg.ord_de[i], D);
    if (!(cfg.ass_de[static_cast<size_t>(r)] == cfg.ass_scalar[static_cast<size_t>(r)] &&
          cfg.ass_de[static_cast<size_t>(r)] == cfg.ass_re[static_cast<size_t>(r)]))
      break;
    rep.fusible_prefix = static_cast<int>(i) + 1;
  }
  rep.fully_fused = cfg.ord_de == cfg.ord_scalar && cfg.ord_de == cfg.ord_re &&
                    cfg.ass_de == cfg.ass_scalar && cfg.ass_de == cfg.ass_re;

  std::vector<std::vector<int64_t>> in_dims = infer_buffer_sizes(expr.input_view, expr.full_ranges());
  for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
    std::vector<BufferStaging> chain = input_chain(ll, expr, b);
    for (size_t k = 1; k < chain.size(); ++k)
      if (same_staging(chain[k - 1], chain[k])) ++rep.elided_copies;
    rep.reduced_input_sizes.push_back(reduced_dims(in_dims[b], input_xf(expr, b)));
  }

  for (const auto& row : cfg.num_parts)
    for (int64_t p : row)
      if (p == 1) ++rep.constant_levels;
  return rep;
}

std::string emit(const LowLevelExpr& ll, const HighLevelExpr& expr, const CodegenOptions& options) {
  const AsmModel& model = ll.model;
  const TuningConfig& cfg = ll.config;
  const int D = expr.dim_count();
  {
    ValidationReport vr = validate(cfg, expr, model, ModelConstraintSet::none());
    if (!vr.ok)
      fail("InvalidConfig",
           "configuration violates \"" + vr.violations[0].code + "\": " + vr.violations[0].message);
    ValidationReport hom = validate_md_hom(expr);
    if (!hom.ok) fail("InvalidConfig", "expression is not an md_hom: " + hom.violations[0].message);
  }

  ScalarExpr scalar = expr.scalar;
  scalar.typecheck(type_context(expr));

  std::vector<std::vector<int64_t>> in_dims = infer_buffer_sizes(expr.input_view, expr.full_ranges());
  std::vector<std::vector<int64_t>> out_dims =
      infer_buffer_sizes(expr.output_view, collapsed_ranges(expr));

  // Input staging plans.
  std::vector<InPlan> ins;
  for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
    const ViewBuffer& vb = expr.input_view.buffers[b];
    InPlan p;
    p.name = vb.name;
    p.type = vb.type;
    p.orig_dims = in_dims[b];
    std::vector<BufferStaging> chain = input_chain(ll, expr, b);
    int stage_no = 0;
    for (size_t k = 1; k < chain.size(); ++k) {
      if (options.eliminate_buffers && same_staging(chain[k - 1], chain[k])) continue;
      ++stage_no;
      p.stages.push_back({p.name + "_s" + std::to_string(stage_no), chain[k].region, chain[k].layout});
    }
    if (options.reduce_sizes && !p.stages.empty()) {
      p.xf = input_xf(expr, b);
    } else {
      p.xf.assign(static_cast<size_t>(vb.rank), DimXf{});
    }
    p.red_dims = reduced_dims(p.orig_dims, p.xf);
    ins.push_back(std::move(p));
  }

  // Output accumulator plans.
  std::vector<OutPlan> outs;
  for (size_t b = 0; b < expr.output_view.buffers.size(); ++b) {
    const ViewBuffer& vb = expr.output_view.buffers[b];
    OutPlan p;
    p.name = vb.name;
    p.type = vb.type;
    p.dims = out_dims[b];
    p.acc_layout = ll.scalar_step.out_staging[b].layout;
    p.direct = options.eliminate_buffers && identity_perm(p.acc_layout);
    if (p.direct) {
      std::vector<int> ident;
      for (int a = 1; a <= vb.rank; ++a) ident.push_back(a);
      p.acc_layout = ident;
      p.acc = p.name;
    } else {
      p.acc = p.name + "_acc";
    }
    outs.push_back(std::move(p));
  }

  // Combine structure.
  bool all_concat = true;
  std::vector<bool> pw_dim(static_cast<size_t>(D), false), ps_dim(static_cast<size_t>(D), false);
  for (int d = 0; d < D; ++d) {
    CombineKind k = expr.combine[static_cast<size_t>(d)].kind;
    if (k != CombineKind::Concat) all_concat = false;
    pw_dim[static_cast<size_t>(d)] = k == CombineKind::PointWise;
    ps_dim[static_cast<size_t>(d)] = k == CombineKind::PrefixSum;
  }
  std::optional<BinOp> fold = shared_fold_op(expr);

  bool fused = options.fuse && cfg.ord_de == cfg.ord_scalar && cfg.ord_de == cfg.ord_re &&
               cfg.ass_de == cfg.ass_scalar && cfg.ass_de == cfg.ass_re;

  std::vector<NestLevel> scalar_nest = nest_levels(ll, cfg.ord_scalar, cfg.ass_scalar, D);
  std::vector<NestLevel> re_nest = nest_levels(ll, cfg.ord_re, cfg.ass_re, D);
  const std::vector<NestLevel>& acc_nest = fused ? scalar_nest : re_nest;

  // Per-part partial accumulators when the outermost core-tagged loop of the
  // accumulating nest runs over a pointwise dimension.
  int par_pos = -1;
  for (size_t i = 0; i < acc_nest.size(); ++i) {
    if (!acc_nest[i].core || acc_nest[i].parts == 1) continue;
    if (pw_dim[static_cast<size_t>(acc_nest[i].lv.dim - 1)]) par_pos = static_cast<int>(i);
    break;
  }
  bool partials = par_pos >= 0 && fold.has_value();

  UsedOps used;
  for (const OutAssign& a : scalar.assigns) scan_used(a.expr, used);
  if (fold && (fold->kind == BinOpKind::Min || fold->kind == BinOpKind::Max)) {
    for (const ViewBuffer& vb : expr.output_view.buffers)
      used.note(fold->kind == BinOpKind::Min ? ExprKind::Min : ExprKind::Max, vb.type);
  }

  std::vector<std::string> dim_names = expr.dim_names;
  std::string dim_params;
  for (int d = 0; d < D; ++d) {
    if (d) dim_params += ", ";
    dim_params += "d_" + dim_names[static_cast<size_t>(d)];
  }

  std::ostringstream out;
  out << "/* " << expr.name << ": MDH kernel for " << model.name << " */\n";
  out << "#include <stdlib.h>\n#include <limits.h>\n#include <math.h>\n";
  out << "#ifdef _OPENMP\n#include <omp.h>\n#endif\n\n";

  // 0.1 scalar function.
  out << "/* 0.1 scalar function */\n";
  for (const auto& [kind, t] : used.fn) {
    std::string ct = ctype(t), sf = type_suffix(t);
    if (kind == ExprKind::Min)
      out << "static inline " << ct << " mdh_min_" << sf << "(" << ct << " a, " << ct
          << " b) { return a < b ? a : b; }\n";
    if (kind == ExprKind::Max)
      out << "static inline " << ct << " mdh_max_" << sf << "(" << ct << " a, " << ct
          << " b) { return a > b ? a : b; }\n";
    if (kind == ExprKind::Abs)
      out << "static inline " << ct << " mdh_abs_" << sf << "(" << ct
          << " a) { return a < 0 ? -a : a; }\n";
    if (kind == ExprKind::Cmp)
      out << "static inline long long mdh_cmp_" << sf << "(" << ct << " a, " << ct
          << " b) { return (a > b) - (a < b); }\n";
  }
  out << "static inline void mdh_f(";
  {
    bool first = true;
    for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
      const ViewBuffer& vb = expr.input_view.buffers[b];
      for (size_t a = 0; a < vb.accesses.size(); ++a) {
        if (!first) out << ", ";
        first = false;
        out << "const " << ctype(vb.type) << " in_" << vb.name << "_" << a;
      }
    }
    for (int d = 0; d < D; ++d) out << ", const long long d_" << dim_names[static_cast<size_t>(d)];
    for (const ViewBuffer& vb : expr.output_view.buffers)
      for (size_t a = 0; a < vb.accesses.size(); ++a)
        out << ", " << ctype(vb.type) << "* out_" << vb.name << "_" << a;
  }
  out << ") {\n";
  for (const OutAssign& a : scalar.assigns) {
    out << "  *out_" << expr.output_view.buffers[static_cast<size_t>(a.buf - 1)].name << "_"
        << a.acc - 1 << " = " << expr_c(a.expr, expr) << ";\n";
  }
  out << "}\n\n";

  // Combine operators.
  out << "/* combine:";
  for (int d = 0; d < D; ++d)
    out << " " << dim_names[static_cast<size_t>(d)] << "=" << expr.combine[static_cast<size_t>(d)].to_string();
  out << " */\n\n";

  // 0.2 input index maps.
  out << "/* 0.2 input index maps */\n";
  for (size_t b = 0; b < ins.size(); ++b) {
    const ViewBuffer& vb = expr.input_view.buffers[b];
    const InPlan& p = ins[b];
    const std::vector<int64_t>& dims = p.stages.empty() ? p.orig_dims : p.red_dims;
    std::vector<int> layout = p.stages.empty() ? std::vector<int>() : p.stages.back().layout;
    if (layout.empty())
      for (int a = 1; a <= vb.rank; ++a) layout.push_back(a);
    for (size_t a = 0; a < vb.accesses.size(); ++a) {
      std::vector<std::string> coords;
      for (int r = 0; r < vb.rank; ++r)
        coords.push_back(affine_c(vb.accesses[a].idx[static_cast<size_t>(r)], dim_names,
                                  p.xf[static_cast<size_t>(r)], no_drop(D)));
      out << "#define IDX_" << p.name << "_" << a << "(" << dim_params << ") "
          << flat_index(coords, dims, layout) << "\n";
    }
  }

  // 0.3 output index maps (collapsed dimensions pinned to zero).
  out << "/* 0.3 output index maps */\n";
  for (size_t b = 0; b < outs.size(); ++b) {
    const ViewBuffer& vb = expr.output_view.buffers[b];
    const OutPlan& p = outs[b];
    std::vector<bool> drop = pw_dim;
    for (size_t a = 0; a < vb.accesses.size(); ++a) {
      std::vector<std::string> coords;
      for (int r = 0; r < vb.rank; ++r)
        coords.push_back(affine_c(vb.accesses[a].idx[static_cast<size_t>(r)], dim_names, DimXf{}, drop));
      out << "#define IDX_" << p.name << "_" << a << "(" << dim_params << ") "
          << flat_index(coords, p.dims, p.acc_layout) << "\n";
    }
  }
  if (!fused) {
    std::vector<std::string> coords;
    std::vector<int64_t> dims = expr.sizes;
    std::vector<int> ident;
    for (int d = 0; d < D; ++d) {
      coords.push_back("(d_" + dim_names[static_cast<size_t>(d)] + ")");
      ident.push_back(d + 1);
    }
    out << "#define LEAF_IDX(" << dim_params << ") " << flat_index(coords, dims, ident) << "\n";
  }
  out << "\n";

  // Kernel entry.
  out << "void mdh_kernel(";
  {
    bool first = true;
    for (const ViewBuffer& vb : expr.input_view.buffers) {
      if (!first) out << ", ";
      first = false;
      out << "const " << ctype(vb.type) << "* " << vb.name;
    }
    for (const ViewBuffer& vb : expr.output_view.buffers) {
      if (!first) out << ", ";
      first = false;
      out << ctype(vb.type) << "* " << vb.name;
    }
  }
  out << ") {\n";

  // 0.4 buffers.
  out << "  /* 0.4 buffers */\n";
  for (const InPlan& p : ins) {
    for (const Stage& s : p.stages) {
      out << "  " << ctype(p.type) << "* " << s.cname << " = (" << ctype(p.type) << "*)calloc("
          << prod(p.red_dims) << ", sizeof(" << ctype(p.type) << ")); /* " << p.name << " staged in "
          << s.region << " */\n";
    }
  }
  for (const OutPlan& p : outs) {
    if (!p.direct)
      out << "  " << ctype(p.type) << "* " << p.acc << " = (" << ctype(p.type) << "*)calloc("
          << prod(p.dims) << ", sizeof(" << ctype(p.type) << ")); /* " << p.name
          << " accumulator */\n";
  }
  if (!fused) {
    for (const ViewBuffer& vb : expr.output_view.buffers)
      for (size_t a = 0; a < vb.accesses.size(); ++a)
        out << "  " << ctype(vb.type) << "* leaf_" << vb.name << "_" << a << " = (" << ctype(vb.type)
            << "*)calloc(" << prod(expr.sizes) << ", sizeof(" << ctype(vb.type)
            << ")); /* scalar results over the full index space */\n";
  }
  if (partials) {
    for (const OutPlan& p : outs)
      out << "  " << ctype(p.type) << "* part_" << p.name << " = (" << ctype(p.type) << "*)calloc("
          << acc_nest[static_cast<size_t>(par_pos)].parts * prod(p.dims) << ", sizeof("
          << ctype(p.type) << ")); /* per-part partial accumulators */\n";
  }
  out << "#ifdef _OPENMP\n  omp_set_max_active_levels(1);\n#endif\n";

  // 0.5 access aliases.
  out << "  /* 0.5 access aliases */\n";
  for (size_t b = 0; b < ins.size(); ++b) {
    const ViewBuffer& vb = expr.input_view.buffers[b];
    const InPlan& p = ins[b];
    std::string target = p.stages.empty() ? p.name : p.stages.back().cname;
    for (size_t a = 0; a < vb.accesses.size(); ++a)
      out << "#define IN_" << p.name << "_" << a << "(" << dim_params << ") " << target << "[IDX_"
          << p.name << "_" << a << "(" << dim_params << ")]\n";
  }
  for (size_t b = 0; b < outs.size(); ++b) {
    const ViewBuffer& vb = expr.output_view.buffers[b];
    const OutPlan& p = outs[b];
    for (size_t a = 0; a < vb.accesses.size(); ++a)
      out << "#define ACC_" << p.name << "_" << a << "(" << dim_params << ") " << p.acc << "[IDX_"
          << p.name << "_" << a << "(" << dim_params << ")]\n";
  }
  if (!fused) {
    for (const ViewBuffer& vb : expr.output_view.buffers)
      for (size_t a = 0; a < vb.accesses.size(); ++a)
        out << "#define LEAF_" << vb.name << "_" << a << "(" << dim_params << ") leaf_" << vb.name
            << "_" << a << "[LEAF_IDX(" << dim_params << ")]\n";
  }

  // De phase: hoisted staging copies.
  out << "\n  /* de phase: staging copies */\n";
  for (const InPlan& p : ins) {
    std::string prev = p.name;
    bool prev_is_arg = true;
    std::vector<int> prev_layout;
    for (int a = 1; a <= static_cast<int>(p.orig_dims.size()); ++a) prev_layout.push_back(a);
    for (const Stage& s : p.stages) {
      out << "  /* " << prev << " -> " << s.cname << " (" << s.region << ") */\n";
      int rank = static_cast<int>(p.red_dims.size());
      std::string pad = "  ";
      std::vector<std::string> qs;
      for (int r = 0; r < rank; ++r) {
        std::string q = "q" + std::to_string(r);
        out << pad << "for (long long " << q << " = 0; " << q << " < " << p.red_dims[static_cast<size_t>(r)]
            << "; ++" << q << ") {\n";
        pad += "  ";
        qs.push_back(q);
      }
      std::vector<std::string> src_coords = qs;
      if (prev_is_arg) {
        for (int r = 0; r < rank; ++r) {
          const DimXf& xf = p.xf[static_cast<size_t>(r)];
          if (xf.g == 0)
            src_coords[static_cast<size_t>(r)] = std::to_string(xf.min);
          else if (xf.g != 1 || xf.min != 0)
            src_coords[static_cast<size_t>(r)] =
                "(" + std::to_string(xf.min) + " + " + std::to_string(xf.g) + " * " + qs[static_cast<size_t>(r)] + ")";
        }
      }
      const std::vector<int64_t>& src_dims = prev_is_arg ? p.orig_dims : p.red_dims;
      out << pad << s.cname << "[" << flat_index(qs, p.red_dims, s.layout) << "] = " << prev << "["
          << flat_index(src_coords, src_dims, prev_layout) << "];\n";
      for (int r = rank - 1; r >= 0; --r) {
        pad = std::string(2 * static_cast<size_t>(r) + 2, ' ');
        out << pad << "}\n";
      }
      prev = s.cname;
      prev_is_arg = false;
      prev_layout = s.layout;
    }
  }

  // Identity-seeded accumulators for the partial-merge path.
  if (partials) {
    for (const OutPlan& p : outs)
      out << "  for (long long t = 0; t < " << prod(p.dims) << "; ++t) " << p.acc << "[t] = "
          << identity_c(fold->kind, p.type) << ";\n";
  }

  auto body_locals = [&](Nest& n) {
    emit_dim_consts(n, ll, expr);
    std::string call = "mdh_f(";
    bool first = true;
    for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
      const ViewBuffer& vb = expr.input_view.buffers[b];
      for (size_t a = 0; a < vb.accesses.size(); ++a) {
        if (!first) call += ", ";
        first = false;
        call += "IN_" + vb.name + "_" + std::to_string(a) + "(" + dim_params + ")";
      }
    }
    for (int d = 0; d < D; ++d) call += ", d_" + dim_names[static_cast<size_t>(d)];
    for (const ViewBuffer& vb : expr.output_view.buffers)
      for (size_t a = 0; a < vb.accesses.size(); ++a) {
        n.line(std::string(ctype(vb.type)) + " r_" + vb.name + "_" + std::to_string(a) + ";");
        call += ", &r_" + vb.name + "_" + std::to_string(a);
      }
    n.line(call + ");");
  };

  auto component_names = [&]() {
    std::vector<std::pair<std::string, ScalarType>> comps;
    for (const ViewBuffer& vb : expr.output_view.buffers)
      for (size_t a = 0; a < vb.accesses.size(); ++a)
        comps.push_back({vb.name + "_" + std::to_string(a), vb.type});
    return comps;
  };

  // Accumulation statements shared by the fused and the re nest bodies.
  auto emit_accumulate = [&](Nest& n, const std::vector<NestLevel>& nest_lv,
                             const std::string& value_prefix) {
    auto comps = component_names();
    if (all_concat) {
      for (const auto& [c, t] : comps)
        n.line("ACC_" + c + "(" + dim_params + ") = " + value_prefix + c + ";");
      return;
    }
    if (partials) {
      const NestLevel& pl = acc_nest[static_cast<size_t>(par_pos)];
      std::string pv = part_var(pl.lv, expr);
      size_t ci = 0;
      for (const OutPlan& p : outs) {
        const ViewBuffer& vb = expr.output_view.buffers[ci];
        for (size_t a = 0; a < vb.accesses.size(); ++a) {
          std::string slot = "part_" + p.name + "[" + pv + " * " + std::to_string(prod(p.dims)) +
                             " + IDX_" + p.name + "_" + std::to_string(a) + "(" + dim_params + ")]";
          std::string v = value_prefix + p.name + "_" + std::to_string(a);
          n.line(slot + " = " + fold_c(fold->kind, p.type, slot, v) + ";");
        }
        ++ci;
      }
      return;
    }
    // First visit in fold order: every pointwise part index is zero.
    std::vector<std::string> guards;
    for (const NestLevel& nl : nest_lv)
      if (pw_dim[static_cast<size_t>(nl.lv.dim - 1)]) guards.push_back(part_var(nl.lv, expr) + " == 0");
    if (guards.empty()) {
      for (const auto& [c, t] : comps)
        n.line("ACC_" + c + "(" + dim_params + ") = " + value_prefix + c + ";");
      return;
    }
    std::string cond;
    for (size_t i = 0; i < guards.size(); ++i) {
      if (i) cond += " && ";
      cond += guards[i];
    }
    n.line("if (" + cond + ") {");
    ++n.indent;
    for (const auto& [c, t] : comps)
      n.line("ACC_" + c + "(" + dim_params + ") = " + value_prefix + c + ";");
    --n.indent;
    n.line("} else {");
    ++n.indent;
    for (const auto& [c, t] : comps) {
      std::string acc = "ACC_" + c + "(" + dim_params + ")";
      n.line(acc + " = " + fold_c(fold->kind, t, acc, value_prefix + c) + ";");
    }
    --n.indent;
    n.line("}");
  };

  auto emit_partial_init = [&](Nest& n) {
    const NestLevel& pl = acc_nest[static_cast<size_t>(par_pos)];
    std::string pv = part_var(pl.lv, expr);
    for (const OutPlan& p : outs)
      n.line("for (long long t = 0; t < " + std::to_string(prod(p.dims)) + "; ++t) part_" + p.name +
             "[" + pv + " * " + std::to_string(prod(p.dims)) + " + t] = " +
             identity_c(fold->kind, p.type) + ";");
  };

  auto emit_partial_merge = [&](Nest& n) {
    const NestLevel& pl = acc_nest[static_cast<size_t>(par_pos)];
    n.line("for (long long pm = 0; pm < " + std::to_string(pl.parts) + "; ++pm) {");
    ++n.indent;
    for (const OutPlan& p : outs) {
      n.line("for (long long t = 0; t < " + std::to_string(prod(p.dims)) + "; ++t) {");
      ++n.indent;
      std::string slot = p.acc + "[t]";
      std::string v = "part_" + p.name + "[pm * " + std::to_string(prod(p.dims)) + " + t]";
      n.line(slot + " = " + fold_c(fold->kind, p.type, slot, v) + ";");
      --n.indent;
      n.line("}");
    }
    --n.indent;
    n.line("}");
  };

  if (fused) {
    out << "\n  /* fused de / scalar / re nest */\n";
    Nest n(out, expr, options, 1);
    for (size_t i = 0; i < scalar_nest.size(); ++i) {
      n.open(scalar_nest[i], true);
      if (partials && static_cast<int>(i) == par_pos) emit_partial_init(n);
    }
    body_locals(n);
    emit_accumulate(n, scalar_nest, "r_");
    if (partials) {
      n.close_to(static_cast<size_t>(par_pos));
      emit_partial_merge(n);
    }
    n.close_to(0);
  } else {
    out << "\n  /* scalar phase */\n";
    {
      Nest n(out, expr, options, 1);
      for (const NestLevel& nl : scalar_nest) n.open(nl, true);
      body_locals(n);
      for (const auto& [c, t] : component_names())
        n.line("LEAF_" + c + "(" + dim_params + ") = r_" + c + ";");
      n.close_to(0);
    }
    out << "\n  /* re phase */\n";
    {
      Nest n(out, expr, options, 1);
      for (size_t i = 0; i < re_nest.size(); ++i) {
        n.open(re_nest[i], true);
        if (partials && static_cast<int>(i) == par_pos) emit_partial_init(n);
      }
      emit_dim_consts(n, ll, expr);
      for (const auto& [c, t] : component_names())
        n.line(std::string("const ") + ctype(t) + " r_" + c + " = LEAF_" + c + "(" + dim_params + ");");
      emit_accumulate(n, re_nest, "r_");
      if (partials) {
        n.close_to(static_cast<size_t>(par_pos));
        emit_partial_merge(n);
      }
      n.close_to(0);
    }
  }

  // Prefix combines.
  for (int d = 0; d < D; ++d) {
    if (!ps_dim[static_cast<size_t>(d)]) continue;
    out << "\n  /* prefix combine along " << dim_names[static_cast<size_t>(d)] << " */\n";
    int depth = 0;
    std::string pad = "  ";
    std::vector<std::string> args(static_cast<size_t>(D));
    for (int e = 0; e < D; ++e) {
      if (pw_dim[static_cast<size_t>(e)]) {
        args[static_cast<size_t>(e)] = "0";
        continue;
      }
      std::string v = "d_" + dim_names[static_cast<size_t>(e)];
      args[static_cast<size_t>(e)] = v;
      if (e == d) continue;
      out << pad << "for (long long " << v << " = 0; " << v << " < " << expr.sizes[static_cast<size_t>(e)]
          << "; ++" << v << ") {\n";
      pad += "  ";
      ++depth;
    }
    std::string v = "d_" + dim_names[static_cast<size_t>(d)];
    out << pad << "for (long long " << v << " = 1; " << v << " < " << expr.sizes[static_cast<size_t>(d)]
        << "; ++" << v << ") {\n";
    pad += "  ";
    ++depth;
    std::vector<std::string> prev_args = args;
    prev_args[static_cast<size_t>(d)] = "(" + v + " - 1)";
    auto arg_list = [&](const std::vector<std::string>& a) {
      std::string s;
      for (size_t i = 0; i < a.size(); ++i) {
        if (i) s += ", ";
        s += a[i];
      }
      return s;
    };
    for (const auto& [c, t] : component_names()) {
      std::string cur = "ACC_" + c + "(" + arg_list(args) + ")";
      std::string prev = "ACC_" + c + "(" + arg_list(prev_args) + ")";
      out << pad << cur << " = " << fold_c(fold->kind, t, cur, prev) << ";\n";
    }
    for (int k = depth; k > 0; --k) out << std::string(2 * static_cast<size_t>(k), ' ') << "}\n";
  }

  // Output view writeback for staged accumulators.
  for (const OutPlan& p : outs) {
    if (p.direct) continue;
    out << "\n  /* output view writeback: " << p.name << " */\n";
    int rank = static_cast<int>(p.dims.size());
    std::string pad = "  ";
    std::vector<std::string> qs;
    std::vector<int> ident;
    for (int r = 0; r < rank; ++r) {
      std::string q = "q" + std::to_string(r);
      out << pad << "for (long long " << q << " = 0; " << q << " < " << p.dims[static_cast<size_t>(r)]
          << "; ++" << q << ") {\n";
      pad += "  ";
      qs.push_back(q);
      ident.push_back(r + 1);
    }
    out << pad << p.name << "[" << flat_index(qs, p.dims, ident) << "] = " << p.acc << "["
        << flat_index(qs, p.dims, p.acc_layout) << "];\n";
    for (int r = rank - 1; r >= 0; --r)
      out << std::string(2 * static_cast<size_t>(r) + 2, ' ') << "}\n";
  }

  // Cleanup.
  out << "\n";
  for (const InPlan& p : ins)
    for (const Stage& s : p.stages) out << "  free(" << s.cname << ");\n";
  for (const OutPlan& p : outs) {
    if (!p.direct) out << "  free(" << p.acc << ");\n";
    if (partials) out << "  free(part_" << p.name << ");\n";
  }
  if (!fused) {
    for (const ViewBuffer& vb : expr.output_view.buffers)
      for (size_t a = 0; a < vb.accesses.size(); ++a)
        out << "  free(leaf_" << vb.name << "_" << a << ");\n";
  }
  out << "}\n";
  return out.str();
}

} // namespace mdh
