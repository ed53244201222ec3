#include "mdh/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mdh/bundled.hpp"
#include "mdh/error.hpp"
#include "mdh/json_io.hpp"

namespace mdh {

namespace {
constexpr int kMaxSampleAttempts = 10000;

std::string level_str(const MdhLevel& l) {
  return "(" + std::to_string(l.layer) + "," + std::to_string(l.dim) + ")";
}

void add(ValidationReport& rep, const std::string& rule, const std::string& msg, int da = 0, int db = 0) {
  rep.ok = false;
  rep.violations.push_back({rule, msg, da, db});
}

bool is_perm_1_to_n(const std::vector<int>& p) {
  std::vector<bool> seen(p.size(), false);
  for (int v : p) {
    if (v < 1 || v > static_cast<int>(p.size()) || seen[static_cast<size_t>(v - 1)]) return false;
    seen[static_cast<size_t>(v - 1)] = true;
  }
  return true;
}
} // namespace

ModelConstraintSet ModelConstraintSet::for_model(const AsmModel& m) {
  ModelConstraintSet cs;
  if (m.name == "CUDA" || m.name == "CUDA+WRP" || m.name == "OpenCL") cs.name = m.name;
  return cs;
}

ValidationReport validate(const TuningConfig& config, const HighLevelExpr& expr, const AsmModel& model,
                          const ModelConstraintSet& constraints) {
  ValidationReport rep;
  const int L = model.layer_count();
  const int D = expr.dim_count();
  const int LD = L * D;
  const int M = model.mem_count();
  const size_t Bin = expr.input_view.buffers.size();
  const size_t Bout = expr.output_view.buffers.size();

  // Shape completeness first; the remaining rules assume it.
  bool shape_ok = true;
  auto shape = [&](bool cond, const std::string& what) {
    if (!cond) {
      add(rep, "structure", what);
      shape_ok = false;
    }
  };
  shape(static_cast<int>(config.num_parts.size()) == L, "num_parts must have one row per ASM layer");
  for (auto& row : config.num_parts)
    shape(static_cast<int>(row.size()) == D, "num_parts rows must have one entry per dimension");
  for (auto* ord : {&config.ord_de, &config.ord_scalar, &config.ord_re})
    shape(static_cast<int>(ord->size()) == LD, "phase orders must enumerate all MDH levels");
  for (auto* ass : {&config.ass_de, &config.ass_scalar, &config.ass_re})
    shape(static_cast<int>(ass->size()) == LD, "assignments must cover all MDH levels");
  shape(config.mem_de.size() == Bin && config.layout_de.size() == Bin &&
            config.mem_scalar_in.size() == Bin && config.layout_scalar_in.size() == Bin,
        "input-buffer maps must have one entry per input buffer");
  shape(config.mem_re.size() == Bout && config.layout_re.size() == Bout &&
            config.mem_scalar_out.size() == Bout && config.layout_scalar_out.size() == Bout,
        "output-buffer maps must have one entry per output buffer");
  for (auto* m2 : {&config.mem_de, &config.mem_re})
    for (auto& per_level : *m2)
      shape(static_cast<int>(per_level.size()) == LD, "per-level region maps must cover all MDH levels");
  for (auto* l3 : {&config.layout_de, &config.layout_re})
    for (auto& per_level : *l3)
      shape(static_cast<int>(per_level.size()) == LD, "per-level layout maps must cover all MDH levels");
  if (!shape_ok) return rep;

  // Full partitioning.
  for (int d = 1; d <= D; ++d) {
    int64_t prod = 1;
    bool positive = true;
    for (int l = 1; l <= L; ++l) {
      int64_t p = config.parts({l, d});
      if (p < 1) positive = false;
      prod *= p;
    }
    if (!positive)
      add(rep, "full partitioning", "part counts must be >= 1 in dimension " + std::to_string(d), d, d);
    else if (prod != expr.sizes[static_cast<size_t>(d - 1)])
      add(rep, "full partitioning",
          "part counts in dimension " + std::to_string(d) + " multiply to " + std::to_string(prod) +
              ", size is " + std::to_string(expr.sizes[static_cast<size_t>(d - 1)]),
          d, d);
  }

  // Orders are permutations of the level set.
  auto check_ord = [&](const std::vector<MdhLevel>& ord, const char* which) {
    std::vector<bool> seen(static_cast<size_t>(LD), false);
    for (auto& lv : ord) {
      if (lv.layer < 1 || lv.layer > L || lv.dim < 1 || lv.dim > D) {
        add(rep, "order bijection", std::string(which) + " names level " + level_str(lv) + " outside the level set");
        return;
      }
      size_t r = static_cast<size_t>(level_rank(lv, D));
      if (seen[r]) {
        add(rep, "order bijection", std::string(which) + " repeats level " + level_str(lv));
        return;
      }
      seen[r] = true;
    }
  };
  check_ord(config.ord_de, "ord_de");
  check_ord(config.ord_scalar, "ord_scalar");
  check_ord(config.ord_re, "ord_re");

  // Assignments are bijections onto the ASM level set.
  auto check_ass = [&](const std::vector<AsmLevel>& ass, const char* which) {
    std::vector<bool> seen(static_cast<size_t>(LD), false);
    for (auto& lv : ass) {
      if (lv.layer < 1 || lv.layer > L || lv.dim < 1 || lv.dim > D) {
        add(rep, "assignment bijection",
            std::string(which) + " targets ASM level (" + std::to_string(lv.layer) + "," + std::to_string(lv.dim) +
                ") outside the model");
        return;
      }
      size_t r = static_cast<size_t>((lv.layer - 1) * D + (lv.dim - 1));
      if (seen[r]) {
        add(rep, "assignment bijection", std::string(which) + " maps two levels onto one ASM level");
        return;
      }
      seen[r] = true;
    }
  };
  check_ass(config.ass_de, "ass_de");
  check_ass(config.ass_scalar, "ass_scalar");
  check_ass(config.ass_re, "ass_re");

  // Region ids stay within the model's memory layers.
  auto check_region = [&](int r, const std::string& where) {
    if (r < 1 || r > M)
      add(rep, "region range", where + " names region " + std::to_string(r) + ", model has " + std::to_string(M));
  };
  for (size_t b = 0; b < Bin; ++b) {
    for (int r : config.mem_de[b]) check_region(r, "mem_de['" + expr.input_view.buffers[b].name + "']");
    check_region(config.mem_scalar_in[b], "mem_scalar_in['" + expr.input_view.buffers[b].name + "']");
  }
  for (size_t b = 0; b < Bout; ++b) {
    for (int r : config.mem_re[b]) check_region(r, "mem_re['" + expr.output_view.buffers[b].name + "']");
    check_region(config.mem_scalar_out[b], "mem_scalar_out['" + expr.output_view.buffers[b].name + "']");
  }

  // Layouts are permutations of each buffer's dimensions.
  auto check_layouts = [&](const std::vector<std::vector<int>>& per_level, const ViewBuffer& vb,
                           const std::string& where) {
    for (auto& p : per_level)
      if (static_cast<int>(p.size()) != vb.rank || !is_perm_1_to_n(p))
        add(rep, "layout permutation", where + "['" + vb.name + "'] is not a permutation of 1.." + std::to_string(vb.rank));
  };
  for (size_t b = 0; b < Bin; ++b) {
    check_layouts(config.layout_de[b], expr.input_view.buffers[b], "layout_de");
    check_layouts({config.layout_scalar_in[b]}, expr.input_view.buffers[b], "layout_scalar_in");
  }
  for (size_t b = 0; b < Bout; ++b) {
    check_layouts(config.layout_re[b], expr.output_view.buffers[b], "layout_re");
    check_layouts({config.layout_scalar_out[b]}, expr.output_view.buffers[b], "layout_scalar_out");
  }

  if (!rep.ok) return rep;

  // Model rules, on structurally sound configs only.
  auto count_rule = [&](const char* core_name, int64_t bound, const std::string& rule) {
    int layer = model.layer_id(core_name);
    if (layer < 0) return;
    struct Named {
      const char* name;
      const std::vector<AsmLevel>* ass;
    };
    for (auto& na : {Named{"ass_de", &config.ass_de}, Named{"ass_scalar", &config.ass_scalar},
                     Named{"ass_re", &config.ass_re}}) {
      int64_t prod = 1;
      for (int r = 0; r < LD; ++r)
        if ((*na.ass)[static_cast<size_t>(r)].layer == layer) prod *= config.parts(level_from_rank(r, D));
      if (prod > bound)
        add(rep, rule, std::string(na.name) + " places " + std::to_string(prod) + " parts on " + core_name +
                           ", limit is " + std::to_string(bound));
    }
  };
  auto combine_rule = [&](const char* core_name, const std::vector<const char*>& permitted,
                          const std::string& rule) {
    int layer = model.layer_id(core_name);
    if (layer < 0) return;
    std::vector<int> allowed;
    for (auto* rn : permitted) {
      int id = model.region_id(rn);
      if (id > 0) allowed.push_back(id);
    }
    for (int r = 0; r < LD; ++r) {
      if (config.ass_re[static_cast<size_t>(r)].layer != layer) continue;
      MdhLevel lv = level_from_rank(r, D);
      if (config.parts(lv) <= 1) continue;
      if (expr.combine[static_cast<size_t>(lv.dim - 1)].kind == CombineKind::Concat) continue;
      for (size_t b = 0; b < Bout; ++b) {
        int region = config.mem_re[b][static_cast<size_t>(r)];
        if (std::find(allowed.begin(), allowed.end(), region) == allowed.end())
          add(rep, rule, "level " + level_str(lv) + " combines on " + core_name + " but stores '" +
                             expr.output_view.buffers[b].name + "' in " + model.region_name(region));
      }
    }
  };

  if (constraints.name == "CUDA") {
    count_rule("CC", 1024, "Number of CCs limited");
    combine_rule("SMX", {"DM"}, "SMXs combine in DM");
    combine_rule("CC", {"DM", "SM"}, "CCs combine in DM/SM");
  } else if (constraints.name == "CUDA+WRP") {
    count_rule("CC", 1024, "Number of CCs limited");
    combine_rule("SMX", {"DM"}, "SMXs combine in DM");
    combine_rule("WRP", {"DM", "SM"}, "WRPs combine in DM/SM");
  } else if (constraints.name == "OpenCL") {
    count_rule("PE", config.c_dev, "Number of PEs limited");
    combine_rule("CU", {"GM"}, "CUs combine in GM");
    combine_rule("PE", {"GM", "LM"}, "PEs combine in GM/LM");
  }

  return rep;
}

int64_t ordered_factorization_count(int64_t n, int k) {
  if (k <= 0) return n == 1 ? 1 : 0;
  static thread_local std::map<std::pair<int64_t, int>, int64_t> memo;
  if (k == 1 || n == 1) return 1;
  auto key = std::make_pair(n, k);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  int64_t total = 0;
  for (int64_t u = 1; u <= n; ++u)
    if (n % u == 0) total += ordered_factorization_count(n / u, k - 1);
  memo[key] = total;
  return total;
}

std::vector<int64_t> sample_ordered_factorization(int64_t n, int k, Rng& rng) {
  std::vector<int64_t> out;
  out.reserve(static_cast<size_t>(k));
  int64_t cur = n;
  for (int pos = k; pos >= 2; --pos) {
    int64_t total = ordered_factorization_count(cur, pos);
    int64_t pick = rng.below_i(total);
    for (int64_t u = 1; u <= cur; ++u) {
      if (cur % u != 0) continue;
      int64_t w = ordered_factorization_count(cur / u, pos - 1);
      if (pick < w) {
        out.push_back(u);
        cur /= u;
        break;
      }
      pick -= w;
    }
  }
  out.push_back(cur);
  return out;
}

namespace {

std::vector<int> random_layout(int rank, Rng& rng) {
  std::vector<int> p(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) p[static_cast<size_t>(i)] = i + 1;
  rng.shuffle(p);
  return p;
}

std::vector<int> identity_layout(int rank) {
  std::vector<int> p(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) p[static_cast<size_t>(i)] = i + 1;
  return p;
}

std::vector<MdhLevel> lex_levels(int L, int D) {
  std::vector<MdhLevel> v;
  v.reserve(static_cast<size_t>(L * D));
  for (int l = 1; l <= L; ++l)
    for (int d = 1; d <= D; ++d) v.push_back({l, d});
  return v;
}

TuningConfig random_config(const HighLevelExpr& expr, const AsmModel& model, Rng& rng) {
  const int L = model.layer_count();
  const int D = expr.dim_count();
  const int LD = L * D;
  const int M = model.mem_count();
  TuningConfig c;

  c.num_parts.assign(static_cast<size_t>(L), std::vector<int64_t>(static_cast<size_t>(D), 1));
  for (int d = 0; d < D; ++d) {
    std::vector<int64_t> f = sample_ordered_factorization(expr.sizes[static_cast<size_t>(d)], L, rng);
    for (int l = 0; l < L; ++l) c.num_parts[static_cast<size_t>(l)][static_cast<size_t>(d)] = f[static_cast<size_t>(l)];
  }

  for (auto* ord : {&c.ord_de, &c.ord_scalar, &c.ord_re}) {
    *ord = lex_levels(L, D);
    rng.shuffle(*ord);
  }
  for (auto* ass : {&c.ass_de, &c.ass_scalar, &c.ass_re}) {
    std::vector<AsmLevel> tgt;
    tgt.reserve(static_cast<size_t>(LD));
    for (int l = 1; l <= L; ++l)
      for (int d = 1; d <= D; ++d) tgt.push_back({l, d});
    rng.shuffle(tgt);
    *ass = std::move(tgt);
  }

  for (auto& vb : expr.input_view.buffers) {
    std::vector<int> mems(static_cast<size_t>(LD));
    std::vector<std::vector<int>> lays(static_cast<size_t>(LD));
    for (int r = 0; r < LD; ++r) {
      mems[static_cast<size_t>(r)] = static_cast<int>(rng.below_i(M)) + 1;
      lays[static_cast<size_t>(r)] = random_layout(vb.rank, rng);
    }
    c.mem_de.push_back(std::move(mems));
    c.layout_de.push_back(std::move(lays));
    c.mem_scalar_in.push_back(static_cast<int>(rng.below_i(M)) + 1);
    c.layout_scalar_in.push_back(random_layout(vb.rank, rng));
  }
  for (auto& vb : expr.output_view.buffers) {
    std::vector<int> mems(static_cast<size_t>(LD));
    std::vector<std::vector<int>> lays(static_cast<size_t>(LD));
    for (int r = 0; r < LD; ++r) {
      mems[static_cast<size_t>(r)] = static_cast<int>(rng.below_i(M)) + 1;
      lays[static_cast<size_t>(r)] = random_layout(vb.rank, rng);
    }
    c.mem_re.push_back(std::move(mems));
    c.layout_re.push_back(std::move(lays));
    c.mem_scalar_out.push_back(static_cast<int>(rng.below_i(M)) + 1);
    c.layout_scalar_out.push_back(random_layout(vb.rank, rng));
  }
  return c;
}

} // namespace

TuningConfig sample(const HighLevelExpr& expr, const AsmModel& model, const ModelConstraintSet& constraints,
                    uint64_t rng_seed) {
  Rng rng(rng_seed);
  for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
    TuningConfig c = random_config(expr, model, rng);
    if (validate(c, expr, model, constraints).ok) return c;
  }
  fail("NoValidConfigFound", "no valid configuration in " + std::to_string(kMaxSampleAttempts) + " attempts");
}

TuningConfig ReducedSpace::sample(Rng& rng) const {
  const int L = model->layer_count();
  const int D = expr->dim_count();
  const int LD = L * D;
  const int M = model->mem_count();
  const int C = model->core_count();

  for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
    TuningConfig c;
    c.num_parts.assign(static_cast<size_t>(L), std::vector<int64_t>(static_cast<size_t>(D), 1));
    for (int d = 0; d < D; ++d) {
      std::vector<int64_t> f = sample_ordered_factorization(expr->sizes[static_cast<size_t>(d)], L, rng);
      for (int l = 0; l < L; ++l) c.num_parts[static_cast<size_t>(l)][static_cast<size_t>(d)] = f[static_cast<size_t>(l)];
    }

    std::vector<MdhLevel> ord = lex_levels(L, D);
    rng.shuffle(ord);
    c.ord_de = c.ord_scalar = c.ord_re = ord;

    // blocked: cores take the outer layers; strided: cores take the inner
    // layers (the identity onto the memory-first layer ids).
    bool blocked = rng.below(2) == 1;
    std::vector<AsmLevel> ass(static_cast<size_t>(LD));
    for (int l = 1; l <= L; ++l) {
      int target = blocked ? (l <= C ? M + l : l - C) : l;
      for (int d = 1; d <= D; ++d)
        ass[static_cast<size_t>(level_rank({l, d}, D))] = {target, d};
    }
    c.ass_de = c.ass_scalar = c.ass_re = ass;

    for (auto& vb : expr->input_view.buffers) {
      std::vector<int> mems(static_cast<size_t>(LD));
      for (int l = 0; l < L; ++l) {
        int region = static_cast<int>(rng.below_i(M)) + 1;
        for (int d = 0; d < D; ++d) mems[static_cast<size_t>(l * D + d)] = region;
      }
      std::vector<int> lay = random_layout(vb.rank, rng);
      c.mem_de.push_back(std::move(mems));
      c.layout_de.push_back(std::vector<std::vector<int>>(static_cast<size_t>(LD), lay));
      c.mem_scalar_in.push_back(static_cast<int>(rng.below_i(M)) + 1);
      c.layout_scalar_in.push_back(lay);
    }
    for (auto& vb : expr->output_view.buffers) {
      std::vector<int> mems(static_cast<size_t>(LD));
      for (int l = 0; l < L; ++l) {
        int region = static_cast<int>(rng.below_i(M)) + 1;
        for (int d = 0; d < D; ++d) mems[static_cast<size_t>(l * D + d)] = region;
      }
      std::vector<int> lay = random_layout(vb.rank, rng);
      c.mem_re.push_back(std::move(mems));
      c.layout_re.push_back(std::vector<std::vector<int>>(static_cast<size_t>(LD), lay));
      c.mem_scalar_out.push_back(static_cast<int>(rng.below_i(M)) + 1);
      c.layout_scalar_out.push_back(lay);
    }

    if (validate(c, *expr, *model, constraints).ok) return c;
  }
  fail("NoValidConfigFound", "no valid reduced-space configuration in " + std::to_string(kMaxSampleAttempts) +
                                 " attempts");
}

namespace {
double log2_factorial(int n) {
  double s = 0;
  for (int i = 2; i <= n; ++i) s += std::log2(static_cast<double>(i));
  return s;
}

double log2_parts_choices(const HighLevelExpr& expr, int L) {
  double s = 0;
  for (int64_t n : expr.sizes) s += std::log2(static_cast<double>(ordered_factorization_count(n, L)));
  return s;
}
} // namespace

double ReducedSpace::log2_cardinality() const {
  const int L = model->layer_count();
  const int D = expr->dim_count();
  const int M = model->mem_count();
  double s = log2_parts_choices(*expr, L);
  s += log2_factorial(L * D); // one shared order
  s += 1.0;                   // blocked / strided
  double lm = std::log2(static_cast<double>(M));
  for (auto& vb : expr->input_view.buffers) {
    s += (L + 1) * lm; // per-layer de regions + scalar-in region
    s += log2_factorial(vb.rank);
  }
  for (auto& vb : expr->output_view.buffers) {
    s += (L + 1) * lm;
    s += log2_factorial(vb.rank);
  }
  return s;
}

double full_space_log2_cardinality(const HighLevelExpr& expr, const AsmModel& model) {
  const int L = model.layer_count();
  const int D = expr.dim_count();
  const int LD = L * D;
  const int M = model.mem_count();
  double s = log2_parts_choices(expr, L);
  s += 3 * log2_factorial(LD); // three orders
  s += 3 * log2_factorial(LD); // three assignments
  double lm = std::log2(static_cast<double>(M));
  for (auto& vb : expr.input_view.buffers) {
    s += (LD + 1) * lm;
    s += (LD + 1) * log2_factorial(vb.rank);
  }
  for (auto& vb : expr.output_view.buffers) {
    s += (LD + 1) * lm;
    s += (LD + 1) * log2_factorial(vb.rank);
  }
  return s;
}

ReducedSpace reduce_space(const HighLevelExpr& expr, const AsmModel& model) {
  ReducedSpace rs;
  rs.expr = &expr;
  rs.model = &model;
  rs.constraints = ModelConstraintSet::for_model(model);
  return rs;
}

TuningConfig baseline_config(const HighLevelExpr& expr, const AsmModel& model) {
  const int L = model.layer_count();
  const int D = expr.dim_count();
  const int LD = L * D;
  TuningConfig c;
  c.num_parts.assign(static_cast<size_t>(L), std::vector<int64_t>(static_cast<size_t>(D), 1));
  for (int d = 0; d < D; ++d) c.num_parts[0][static_cast<size_t>(d)] = expr.sizes[static_cast<size_t>(d)];
  c.ord_de = c.ord_scalar = c.ord_re = lex_levels(L, D);
  std::vector<AsmLevel> ass(static_cast<size_t>(LD));
  for (int r = 0; r < LD; ++r) {
    MdhLevel lv = level_from_rank(r, D);
    ass[static_cast<size_t>(r)] = {lv.layer, lv.dim};
  }
  c.ass_de = c.ass_scalar = c.ass_re = ass;
  for (auto& vb : expr.input_view.buffers) {
    c.mem_de.push_back(std::vector<int>(static_cast<size_t>(LD), 1));
    c.layout_de.push_back(std::vector<std::vector<int>>(static_cast<size_t>(LD), identity_layout(vb.rank)));
    c.mem_scalar_in.push_back(1);
    c.layout_scalar_in.push_back(identity_layout(vb.rank));
  }
  for (auto& vb : expr.output_view.buffers) {
    c.mem_re.push_back(std::vector<int>(static_cast<size_t>(LD), 1));
    c.layout_re.push_back(std::vector<std::vector<int>>(static_cast<size_t>(LD), identity_layout(vb.rank)));
    c.mem_scalar_out.push_back(1);
    c.layout_scalar_out.push_back(identity_layout(vb.rank));
  }
  return c;
}

Fixture fixture(const std::string& name) {
  for (auto& entry : bundled::fixtures()) {
    Fixture f = parse_fixture_json(entry.content);
    if (f.name == name) return f;
  }
  fail("UnknownFixture", "no bundled fixture named '" + name + "'");
}

} // namespace mdh
