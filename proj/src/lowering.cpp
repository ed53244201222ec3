#include "mdh/lowering.hpp"

#include <algorithm>
#include <sstream>

namespace mdh {

// --- uniform partitioning ------------------------------------------------

int64_t PartitionScheme::stride(int levels) const {
  if (levels < 0 || levels > static_cast<int>(counts.size()))
    fail("OutOfRange", "stride levels " + std::to_string(levels) + " outside 0.." +
                           std::to_string(counts.size()));
  int64_t s = N;
  for (int l = 0; l < levels; ++l) {
    int64_t c = counts[static_cast<size_t>(l)];
    if (c <= 0 || s % c != 0)
      fail("NonDivisible", "part counts do not divide dimension size " + std::to_string(N));
    s /= c;
  }
  return s;
}

IndexRange PartitionScheme::range(const std::vector<int64_t>& p) const {
  return partition_range(N, counts, p);
}

IndexRange partition_range(int64_t N_d, const std::vector<int64_t>& counts,
                           const std::vector<int64_t>& p) {
  if (N_d <= 0) fail("OutOfRange", "dimension size must be positive, got " + std::to_string(N_d));
  int64_t prod = 1;
  for (int64_t c : counts) {
    if (c <= 0) fail("NonDivisible", "part count must be positive, got " + std::to_string(c));
    prod *= c;
  }
  if (N_d % prod != 0)
    fail("NonDivisible", "part counts multiply to " + std::to_string(prod) +
                             " which does not divide " + std::to_string(N_d));
  if (p.size() > counts.size())
    fail("OutOfRange", "part index has " + std::to_string(p.size()) + " levels, scheme has " +
                           std::to_string(counts.size()));
  int64_t os = 0;
  int64_t s = N_d;
  for (size_t l = 0; l < p.size(); ++l) {
    s /= counts[l];
    if (p[l] < 0 || p[l] >= counts[l])
      fail("OutOfRange", "part index " + std::to_string(p[l]) + " outside [0, " +
                             std::to_string(counts[l]) + ") at level " + std::to_string(l + 1));
    os += p[l] * s;
  }
  return {os, os + s};
}

// --- lowering ------------------------------------------------------------

LowLevelExpr lower(const HighLevelExpr& expr, const AsmModel& model, const TuningConfig& config) {
  ValidationReport hom = validate_md_hom(expr);
  if (!hom.ok) fail("InvalidConfig", "expression is not an md_hom: " + hom.violations[0].message);
  ValidationReport vr = validate(config, expr, model, ModelConstraintSet::none());
  if (!vr.ok)
    fail("InvalidConfig",
         "configuration violates \"" + vr.violations[0].code + "\": " + vr.violations[0].message);

  const int D = expr.dim_count();
  LowLevelExpr ll;
  ll.computation = expr.name;
  ll.model = model;
  ll.config = config;

  auto tag_of = [&](const AsmLevel& a) { return StepTag{model.layer_name(a.layer), a.dim}; };

  PhaseStep iv;
  iv.view_stage = true;
  ll.de_steps.push_back(iv);
  for (const MdhLevel& lv : config.ord_de) {
    int rank = level_rank(lv, D);
    PhaseStep st;
    st.level = lv;
    st.tag = tag_of(config.ass_de[static_cast<size_t>(rank)]);
    st.op = CombineOpSpec::concat();
    st.inverse = true;
    for (size_t b = 0; b < expr.input_view.buffers.size(); ++b)
      st.staging.push_back({expr.input_view.buffers[b].name,
                            model.region_name(config.mem_de[b][static_cast<size_t>(rank)]),
                            config.layout_de[b][static_cast<size_t>(rank)]});
    ll.de_steps.push_back(st);
  }

  ll.scalar_step.order = config.ord_scalar;
  for (size_t r = 0; r < config.ass_scalar.size(); ++r)
    ll.scalar_step.ass.push_back(tag_of(config.ass_scalar[r]));
  for (size_t b = 0; b < expr.input_view.buffers.size(); ++b)
    ll.scalar_step.in_staging.push_back({expr.input_view.buffers[b].name,
                                         model.region_name(config.mem_scalar_in[b]),
                                         config.layout_scalar_in[b]});
  for (size_t b = 0; b < expr.output_view.buffers.size(); ++b)
    ll.scalar_step.out_staging.push_back({expr.output_view.buffers[b].name,
                                          model.region_name(config.mem_scalar_out[b]),
                                          config.layout_scalar_out[b]});

  for (const MdhLevel& lv : config.ord_re) {
    int rank = level_rank(lv, D);
    PhaseStep st;
    st.level = lv;
    st.tag = tag_of(config.ass_re[static_cast<size_t>(rank)]);
    st.op = expr.combine[static_cast<size_t>(lv.dim - 1)];
    for (size_t b = 0; b < expr.output_view.buffers.size(); ++b)
      st.staging.push_back({expr.output_view.buffers[b].name,
                            model.region_name(config.mem_re[b][static_cast<size_t>(rank)]),
                            config.layout_re[b][static_cast<size_t>(rank)]});
    ll.re_steps.push_back(st);
  }
  PhaseStep ov;
  ov.view_stage = true;
  ll.re_steps.push_back(ov);

  return ll;
}

// --- pretty printing -----------------------------------------------------

namespace {

std::string dim_letter(int d) {
  switch (d) {
    case 1: return "x";
    case 2: return "y";
    case 3: return "z";
    default: return "d" + std::to_string(d);
  }
}

std::string level_str(const MdhLevel& l) {
  return "(" + std::to_string(l.layer) + "," + dim_letter(l.dim) + ")";
}

std::string tag_str(const StepTag& t) { return "(" + t.layer + "," + dim_letter(t.dim) + ")"; }

std::string perm_str(const std::vector<int>& p) {
  std::string s = "(";
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

std::string op_str(const PhaseStep& st) {
  if (st.inverse) return "cc_inv";
  return st.op.to_string();
}

std::string mem_list(const std::vector<BufferStaging>& v, const std::string& prefix) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += prefix + v[i].buffer + ":" + v[i].region;
  }
  return s + "]";
}

std::string layout_list(const std::vector<BufferStaging>& v, const std::string& prefix) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += prefix + v[i].buffer + ":" + perm_str(v[i].layout);
  }
  return s + "]";
}

void print_phase_step(std::ostringstream& out, const char* phase, const PhaseStep& st,
                      const char* view_op, const TuningConfig& config) {
  out << phase << " ";
  if (st.view_stage) {
    out << "level=(-) tag=(-) op=" << view_op << "\n";
    return;
  }
  out << "level=" << level_str(st.level) << " tag=" << tag_str(st.tag)
      << " parts=" << config.parts(st.level) << " op=" << op_str(st) << " mem="
      << mem_list(st.staging, "") << " layout=" << layout_list(st.staging, "") << "\n";
}

} // namespace

std::string LowLevelExpr::pretty() const {
  std::ostringstream out;
  out << "lowered computation=" << computation << " model=" << model.name << "\n";
  for (const PhaseStep& st : de_steps) print_phase_step(out, "de", st, "iv", config);

  out << "scalar level=(-) tag=(-) op=f ord=[";
  for (size_t i = 0; i < scalar_step.order.size(); ++i) {
    if (i) out << ", ";
    out << level_str(scalar_step.order[i]);
  }
  out << "] ass=[";
  for (size_t i = 0; i < scalar_step.ass.size(); ++i) {
    if (i) out << ", ";
    out << tag_str(scalar_step.ass[i]);
  }
  out << "] mem=[";
  for (size_t i = 0; i < scalar_step.in_staging.size(); ++i) {
    if (i) out << ", ";
    out << "in " << scalar_step.in_staging[i].buffer << ":" << scalar_step.in_staging[i].region;
  }
  for (size_t i = 0; i < scalar_step.out_staging.size(); ++i) {
    if (i || !scalar_step.in_staging.empty()) out << ", ";
    out << "out " << scalar_step.out_staging[i].buffer << ":" << scalar_step.out_staging[i].region;
  }
  out << "] layout=[";
  for (size_t i = 0; i < scalar_step.in_staging.size(); ++i) {
    if (i) out << ", ";
    out << "in " << scalar_step.in_staging[i].buffer << ":" << perm_str(scalar_step.in_staging[i].layout);
  }
  for (size_t i = 0; i < scalar_step.out_staging.size(); ++i) {
    if (i || !scalar_step.in_staging.empty()) out << ", ";
    out << "out " << scalar_step.out_staging[i].buffer << ":" << perm_str(scalar_step.out_staging[i].layout);
  }
  out << "]\n";

  for (const PhaseStep& st : re_steps) print_phase_step(out, "re", st, "ov", config);
  return out.str();
}

// --- parsing the pretty form ----------------------------------------------

namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  fail("ParseError", msg + " at line " + std::to_string(line) + ", column 1");
}

std::string trimmed(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Splits a line at top-level spaces; bracketed values keep their spaces.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : line) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ' ' && depth == 0) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> split_list(const std::string& value, int line) {
  if (value.size() < 2 || value.front() != '[' || value.back() != ']')
    parse_fail(line, "expected bracketed list, got '" + value + "'");
  std::string inner = value.substr(1, value.size() - 2);
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : inner) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trimmed(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  std::string last = trimmed(cur);
  if (!last.empty()) out.push_back(last);
  return out;
}

int64_t parse_int(const std::string& s, int line) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    parse_fail(line, "expected integer, got '" + s + "'");
  }
}

int parse_dim_letter(const std::string& s, int line) {
  if (s == "x") return 1;
  if (s == "y") return 2;
  if (s == "z") return 3;
  if (s.size() > 1 && s[0] == 'd') return static_cast<int>(parse_int(s.substr(1), line));
  parse_fail(line, "bad dimension letter '" + s + "'");
}

std::pair<std::string, std::string> split_pair(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')')
    parse_fail(line, "expected parenthesized pair, got '" + s + "'");
  std::string inner = s.substr(1, s.size() - 2);
  size_t comma = inner.rfind(',');
  if (comma == std::string::npos) parse_fail(line, "expected comma in '" + s + "'");
  return {inner.substr(0, comma), inner.substr(comma + 1)};
}

MdhLevel parse_level(const std::string& s, int line) {
  auto [a, b] = split_pair(s, line);
  return {static_cast<int>(parse_int(a, line)), parse_dim_letter(b, line)};
}

StepTag parse_tag(const std::string& s, int line) {
  auto [a, b] = split_pair(s, line);
  return {a, parse_dim_letter(b, line)};
}

std::vector<int> parse_perm(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')')
    parse_fail(line, "expected parenthesized permutation, got '" + s + "'");
  std::vector<int> out;
  std::string cur;
  for (char c : s.substr(1, s.size() - 2)) {
    if (c == ',') {
      out.push_back(static_cast<int>(parse_int(cur, line)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(static_cast<int>(parse_int(cur, line)));
  return out;
}

CombineOpSpec parse_op(const std::string& s, int line) {
  if (s == "cc" || s == "cc_inv") return CombineOpSpec::concat();
  if (s.rfind("pw:", 0) == 0) return CombineOpSpec::pointwise(BinOp::named(s.substr(3)));
  if (s.rfind("ps:", 0) == 0) return CombineOpSpec::prefix_sum(BinOp::named(s.substr(3)));
  parse_fail(line, "unknown combine op '" + s + "'");
}

struct FieldMap {
  std::vector<std::pair<std::string, std::string>> kv;
  int line = 0;

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : kv)
      if (k == key) return v;
    parse_fail(line, "missing field '" + key + "'");
  }
  bool has(const std::string& key) const {
    for (const auto& [k, v] : kv)
      if (k == key) return true;
    return false;
  }
};

FieldMap field_map(const std::vector<std::string>& fields, int line) {
  FieldMap m;
  m.line = line;
  for (size_t i = 1; i < fields.size(); ++i) {
    size_t eq = fields[i].find('=');
    if (eq == std::string::npos) parse_fail(line, "expected key=value, got '" + fields[i] + "'");
    m.kv.emplace_back(fields[i].substr(0, eq), fields[i].substr(eq + 1));
  }
  return m;
}

// "in M:L1" / "M:L1" -> (is_out unused for de/re), buffer, payload.
struct StagingEntry {
  bool is_out = false;
  std::string buffer;
  std::string payload;
};

StagingEntry parse_staging_entry(const std::string& s, bool scalar, int line) {
  StagingEntry e;
  std::string rest = s;
  if (scalar) {
    if (rest.rfind("in ", 0) == 0) {
      rest = rest.substr(3);
    } else if (rest.rfind("out ", 0) == 0) {
      e.is_out = true;
      rest = rest.substr(4);
    } else {
      parse_fail(line, "scalar staging entry must start with 'in ' or 'out ': '" + s + "'");
    }
  }
  size_t colon = rest.find(':');
  if (colon == std::string::npos) parse_fail(line, "expected buffer:value in '" + s + "'");
  e.buffer = rest.substr(0, colon);
  e.payload = rest.substr(colon + 1);
  return e;
}

std::vector<BufferStaging> parse_staging(const std::string& mem, const std::string& layout,
                                         bool scalar, bool want_out, int line) {
  std::vector<BufferStaging> out;
  std::vector<std::string> mems = split_list(mem, line);
  std::vector<std::string> lays = split_list(layout, line);
  if (mems.size() != lays.size()) parse_fail(line, "mem and layout lists differ in length");
  for (size_t i = 0; i < mems.size(); ++i) {
    StagingEntry me = parse_staging_entry(mems[i], scalar, line);
    StagingEntry le = parse_staging_entry(lays[i], scalar, line);
    if (me.buffer != le.buffer || me.is_out != le.is_out)
      parse_fail(line, "mem and layout lists disagree on buffer '" + me.buffer + "'");
    if (scalar && me.is_out != want_out) continue;
    out.push_back({me.buffer, me.payload, parse_perm(le.payload, line)});
  }
  return out;
}

} // namespace

LowLevelExpr parse_lowlevel_pretty(const std::string& text) {
  LowLevelExpr ll;
  std::vector<std::string> mem_names, core_names;
  auto note_region = [&](const std::string& n) {
    if (std::find(mem_names.begin(), mem_names.end(), n) == mem_names.end()) mem_names.push_back(n);
  };
  auto note_tag = [&](const std::string& n) {
    if (std::find(core_names.begin(), core_names.end(), n) == core_names.end()) core_names.push_back(n);
  };
  auto note_parts = [&](const MdhLevel& lv, int64_t parts) {
    auto& np = ll.config.num_parts;
    if (static_cast<int>(np.size()) < lv.layer) np.resize(static_cast<size_t>(lv.layer));
    for (auto& row : np)
      if (static_cast<int>(row.size()) < lv.dim) row.resize(static_cast<size_t>(lv.dim), 1);
    np[static_cast<size_t>(lv.layer - 1)][static_cast<size_t>(lv.dim - 1)] = parts;
  };

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool seen_scalar = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trimmed(raw);
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    const std::string& phase = fields[0];
    FieldMap m = field_map(fields, line_no);

    if (phase == "lowered") {
      ll.computation = m.get("computation");
      ll.model.name = m.get("model");
      continue;
    }
    if (phase == "scalar") {
      seen_scalar = true;
      for (const std::string& s : split_list(m.get("ord"), line_no))
        ll.scalar_step.order.push_back(parse_level(s, line_no));
      for (const std::string& s : split_list(m.get("ass"), line_no)) {
        StepTag t = parse_tag(s, line_no);
        note_tag(t.layer);
        ll.scalar_step.ass.push_back(t);
      }
      ll.scalar_step.in_staging = parse_staging(m.get("mem"), m.get("layout"), true, false, line_no);
      ll.scalar_step.out_staging = parse_staging(m.get("mem"), m.get("layout"), true, true, line_no);
      for (const BufferStaging& b : ll.scalar_step.in_staging) note_region(b.region);
      for (const BufferStaging& b : ll.scalar_step.out_staging) note_region(b.region);
      continue;
    }
    if (phase != "de" && phase != "re") parse_fail(line_no, "unknown phase '" + phase + "'");

    PhaseStep st;
    const std::string& lvl = m.get("level");
    if (lvl == "(-)") {
      st.view_stage = true;
      const std::string& op = m.get("op");
      if (op != (phase == "de" ? "iv" : "ov"))
        parse_fail(line_no, "view stage of phase '" + phase + "' has op '" + op + "'");
    } else {
      st.level = parse_level(lvl, line_no);
      st.tag = parse_tag(m.get("tag"), line_no);
      note_tag(st.tag.layer);
      note_parts(st.level, parse_int(m.get("parts"), line_no));
      const std::string& op = m.get("op");
      st.inverse = op == "cc_inv";
      st.op = parse_op(op, line_no);
      st.staging = parse_staging(m.get("mem"), m.get("layout"), false, false, line_no);
      for (const BufferStaging& b : st.staging) note_region(b.region);
      if (phase == "de")
        ll.config.ord_de.push_back(st.level);
      else
        ll.config.ord_re.push_back(st.level);
    }
    if (phase == "de") {
      if (seen_scalar) parse_fail(line_no, "de step after scalar step");
      ll.de_steps.push_back(st);
    } else {
      ll.re_steps.push_back(st);
    }
  }
  if (!seen_scalar) parse_fail(line_no, "missing scalar step");
  ll.config.ord_scalar = ll.scalar_step.order;

  ll.model.mem_layers = mem_names;
  for (const std::string& n : core_names)
    if (std::find(mem_names.begin(), mem_names.end(), n) == mem_names.end())
      ll.model.core_layers.push_back(n);
  return ll;
}

} // namespace mdh
