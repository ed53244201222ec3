#include "mdh/json_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mdh/bundled.hpp"
#include "mdh/error.hpp"

namespace mdh {

namespace {

using nlohmann::json;

std::pair<int, int> line_col(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& ex) {
    auto [line, col] = line_col(text, ex.byte > 0 ? ex.byte - 1 : 0);
    fail("ParseError", std::string(what) + ": " + ex.what() + " at line " + std::to_string(line) + ", column " +
                           std::to_string(col));
  }
}

// Re-raises nlohmann access/type errors as ParseError with a context tag.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& ex) {
    fail("ParseError", std::string(what) + ": " + ex.what());
  }
}

ScalarType type_from_name(const std::string& t, const std::string& ctx) {
  if (t == "i64") return ScalarType::Int64;
  if (t == "f64") return ScalarType::Float64;
  fail("ParseError", ctx + ": unknown element type '" + t + "' (expected i64 or f64)");
}

CombineOpSpec combine_from_name(const std::string& s, int dim) {
  if (s == "cc") return CombineOpSpec::concat();
  if (s.rfind("pw:", 0) == 0) return CombineOpSpec::pointwise(BinOp::named(s.substr(3)));
  if (s.rfind("ps:", 0) == 0) return CombineOpSpec::prefix_sum(BinOp::named(s.substr(3)));
  fail("ParseError",
       "combine operator " + std::to_string(dim) + ": '" + s + "' is not cc, pw:<op>, or ps:<op>");
}

ViewBuffer view_buffer_from_json(const json& jb, int dim_count, const char* side) {
  ViewBuffer vb;
  vb.name = jb.at("name").get<std::string>();
  std::string ctx = std::string(side) + " buffer '" + vb.name + "'";
  vb.type = type_from_name(jb.at("type").get<std::string>(), ctx);
  vb.rank = jb.at("rank").get<int>();
  for (auto& a : jb.at("accesses")) vb.accesses.push_back(ViewAccess::parse(a.get<std::string>(), dim_count));
  return vb;
}

int buffer_index(const ViewSpec& view, const std::string& name) {
  for (size_t b = 0; b < view.buffers.size(); ++b)
    if (view.buffers[b].name == name) return static_cast<int>(b);
  return -1;
}

int region_from_json(const json& v, const AsmModel& model, const std::string& ctx) {
  if (v.is_number_integer()) {
    int id = v.get<int>();
    if (id < 1 || id > model.region_count())
      fail("ParseError", ctx + ": region id " + std::to_string(id) + " outside 1.." +
                             std::to_string(model.region_count()));
    return id;
  }
  if (v.is_string()) {
    int id = model.region_id(v.get<std::string>());
    if (id < 0) fail("ParseError", ctx + ": unknown region '" + v.get<std::string>() + "'");
    return id;
  }
  fail("ParseError", ctx + ": region must be a 1-based id or a region name");
}

MdhLevel mdh_level_from_json(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2)
    fail("ParseError", ctx + ": MDH level must be a [layer, dim] pair");
  return {v[0].get<int>(), v[1].get<int>()};
}

AsmLevel asm_level_from_json(const json& v, const AsmModel& model, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2)
    fail("ParseError", ctx + ": ASM level must be a [layer, dim] pair");
  AsmLevel l;
  if (v[0].is_string()) {
    l.layer = model.layer_id(v[0].get<std::string>());
    if (l.layer < 0) fail("ParseError", ctx + ": unknown ASM layer '" + v[0].get<std::string>() + "'");
  } else {
    l.layer = v[0].get<int>();
    if (l.layer < 1 || l.layer > model.layer_count())
      fail("ParseError", ctx + ": ASM layer id " + std::to_string(l.layer) + " outside 1.." +
                             std::to_string(model.layer_count()));
  }
  l.dim = v[1].get<int>();
  return l;
}

std::vector<int> perm_from_json(const json& v, const std::string& ctx) {
  if (!v.is_array()) fail("ParseError", ctx + ": layout must be a permutation array");
  std::vector<int> p;
  for (auto& x : v) p.push_back(x.get<int>());
  return p;
}

TuningConfig config_from_json(const json& j, const HighLevelExpr& e, const AsmModel& model) {
  const int D = e.dim_count();
  const int L = model.layer_count();
  const size_t levels = static_cast<size_t>(L) * static_cast<size_t>(D);
  TuningConfig c = baseline_config(e, model);

  if (j.contains("num_parts")) {
    const json& np = j.at("num_parts");
    if (!np.is_array() || static_cast<int>(np.size()) != L)
      fail("ParseError", "num_parts must have one row per ASM layer (" + std::to_string(L) + ")");
    c.num_parts.clear();
    for (auto& row : np) {
      if (!row.is_array() || static_cast<int>(row.size()) != D)
        fail("ParseError", "num_parts rows must have one entry per dimension (" + std::to_string(D) + ")");
      std::vector<int64_t> r;
      for (auto& x : row) r.push_back(x.get<int64_t>());
      c.num_parts.push_back(std::move(r));
    }
  }

  auto read_ord = [&](const char* key, std::vector<MdhLevel>& dst) {
    if (!j.contains(key)) return;
    dst.clear();
    for (auto& v : j.at(key)) dst.push_back(mdh_level_from_json(v, key));
  };
  read_ord("ord_de", c.ord_de);
  read_ord("ord_scalar", c.ord_scalar);
  read_ord("ord_re", c.ord_re);

  auto read_ass = [&](const char* key, std::vector<AsmLevel>& dst) {
    if (!j.contains(key)) return;
    const json& a = j.at(key);
    if (a.size() != levels)
      fail("ParseError", std::string(key) + " must list one ASM level per MDH level (" +
                             std::to_string(levels) + ")");
    dst.clear();
    for (auto& v : a) dst.push_back(asm_level_from_json(v, model, key));
  };
  read_ass("ass_de", c.ass_de);
  read_ass("ass_scalar", c.ass_scalar);
  read_ass("ass_re", c.ass_re);

  // Per-buffer, per-level-rank region maps; a bare entry broadcasts over ranks.
  auto read_mem_phase = [&](const char* key, const ViewSpec& view, std::vector<std::vector<int>>& dst) {
    if (!j.contains(key)) return;
    for (auto& [name, val] : j.at(key).items()) {
      int b = buffer_index(view, name);
      if (b < 0) fail("ParseError", std::string(key) + ": unknown buffer '" + name + "'");
      std::string ctx = std::string(key) + "." + name;
      std::vector<int>& row = dst[static_cast<size_t>(b)];
      if (val.is_array()) {
        if (val.size() != levels)
          fail("ParseError", ctx + " must list one region per MDH level (" + std::to_string(levels) + ")");
        for (size_t r = 0; r < levels; ++r) row[r] = region_from_json(val[r], model, ctx);
      } else {
        int reg = region_from_json(val, model, ctx);
        for (size_t r = 0; r < levels; ++r) row[r] = reg;
      }
    }
  };
  read_mem_phase("mem_de", e.input_view, c.mem_de);
  read_mem_phase("mem_re", e.output_view, c.mem_re);

  auto read_layout_phase = [&](const char* key, const ViewSpec& view,
                               std::vector<std::vector<std::vector<int>>>& dst) {
    if (!j.contains(key)) return;
    for (auto& [name, val] : j.at(key).items()) {
      int b = buffer_index(view, name);
      if (b < 0) fail("ParseError", std::string(key) + ": unknown buffer '" + name + "'");
      std::string ctx = std::string(key) + "." + name;
      std::vector<std::vector<int>>& row = dst[static_cast<size_t>(b)];
      if (!val.is_array() || val.empty()) fail("ParseError", ctx + ": expected a layout or a layout list");
      if (val[0].is_array()) {
        if (val.size() != levels)
          fail("ParseError", ctx + " must list one layout per MDH level (" + std::to_string(levels) + ")");
        for (size_t r = 0; r < levels; ++r) row[r] = perm_from_json(val[r], ctx);
      } else {
        std::vector<int> p = perm_from_json(val, ctx);
        for (size_t r = 0; r < levels; ++r) row[r] = p;
      }
    }
  };
  read_layout_phase("layout_de", e.input_view, c.layout_de);
  read_layout_phase("layout_re", e.output_view, c.layout_re);

  auto read_mem_scalar = [&](const char* key, const ViewSpec& view, std::vector<int>& dst) {
    if (!j.contains(key)) return;
    for (auto& [name, val] : j.at(key).items()) {
      int b = buffer_index(view, name);
      if (b < 0) fail("ParseError", std::string(key) + ": unknown buffer '" + name + "'");
      dst[static_cast<size_t>(b)] = region_from_json(val, model, std::string(key) + "." + name);
    }
  };
  read_mem_scalar("mem_scalar_in", e.input_view, c.mem_scalar_in);
  read_mem_scalar("mem_scalar_out", e.output_view, c.mem_scalar_out);

  auto read_layout_scalar = [&](const char* key, const ViewSpec& view, std::vector<std::vector<int>>& dst) {
    if (!j.contains(key)) return;
    for (auto& [name, val] : j.at(key).items()) {
      int b = buffer_index(view, name);
      if (b < 0) fail("ParseError", std::string(key) + ": unknown buffer '" + name + "'");
      dst[static_cast<size_t>(b)] = perm_from_json(val, std::string(key) + "." + name);
    }
  };
  read_layout_scalar("layout_scalar_in", e.input_view, c.layout_scalar_in);
  read_layout_scalar("layout_scalar_out", e.output_view, c.layout_scalar_out);

  if (j.contains("c_dev")) c.c_dev = j.at("c_dev").get<int64_t>();
  return c;
}

json level_pair(const MdhLevel& l) { return json::array({l.layer, l.dim}); }

AsmModel asm_from_json(const json& j) {
  AsmModel m;
  m.name = j.contains("name") ? j.at("name").get<std::string>() : std::string("inline");
  if (!j.contains("mem") || !j.at("mem").is_array() || j.at("mem").empty())
    fail("ParseError", "ASM description needs a non-empty \"mem\" layer list");
  for (auto& v : j.at("mem")) m.mem_layers.push_back(v.get<std::string>());
  if (j.contains("core"))
    for (auto& v : j.at("core")) m.core_layers.push_back(v.get<std::string>());
  for (int a = 1; a <= m.layer_count(); ++a)
    for (int b = a + 1; b <= m.layer_count(); ++b)
      if (m.layer_name(a) == m.layer_name(b))
        fail("ParseError", "ASM layer name '" + m.layer_name(a) + "' appears twice");
  return m;
}

std::shared_ptr<Buffer> buffer_from_json(const json& jb, const ViewBuffer& vb, const std::string& ctx) {
  std::vector<int64_t> dims;
  for (auto& v : jb.at("dims")) dims.push_back(v.get<int64_t>());
  if (static_cast<int>(dims.size()) != vb.rank)
    fail("ParseError", ctx + ": " + std::to_string(dims.size()) + " dims for a rank-" +
                           std::to_string(vb.rank) + " buffer");
  auto buf = std::make_shared<Buffer>(Buffer::make(dims, vb.type));
  const json& data = jb.at("data");
  if (static_cast<int64_t>(data.size()) != buf->flat_size())
    fail("ParseError", ctx + ": data has " + std::to_string(data.size()) + " cells, buffer holds " +
                           std::to_string(buf->flat_size()));
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].is_null()) continue; // stays undefined
    if (vb.type == ScalarType::Int64)
      buf->data[i].i = data[i].get<int64_t>();
    else
      buf->data[i].f = data[i].get<double>();
    buf->data[i].type = vb.type;
    buf->defined[i] = 1;
  }
  return buf;
}

json buffer_to_json(const Buffer& b) {
  json jb;
  jb["dims"] = b.dims;
  json data = json::array();
  for (int64_t i = 0; i < b.flat_size(); ++i) {
    if (!b.defined[static_cast<size_t>(i)]) {
      data.push_back(nullptr);
    } else if (b.elem_type == ScalarType::Int64) {
      data.push_back(b.data[static_cast<size_t>(i)].i);
    } else {
      data.push_back(b.data[static_cast<size_t>(i)].f);
    }
  }
  jb["data"] = std::move(data);
  return jb;
}

} // namespace

HighLevelExpr parse_computation_json(const std::string& text) {
  json j = parse_text(text, "computation");
  return guarded("computation", [&] {
    HighLevelExpr e;
    e.name = j.at("name").get<std::string>();
    for (auto& v : j.at("dims")) e.dim_names.push_back(v.get<std::string>());
    for (auto& v : j.at("sizes")) e.sizes.push_back(v.get<int64_t>());
    if (e.dim_names.size() != e.sizes.size())
      fail("ParseError", "computation '" + e.name + "': dims and sizes disagree in length");
    int D = e.dim_count();
    for (auto& jb : j.at("inputs")) e.input_view.buffers.push_back(view_buffer_from_json(jb, D, "input"));
    for (auto& jb : j.at("outputs")) e.output_view.buffers.push_back(view_buffer_from_json(jb, D, "output"));
    e.scalar = ScalarExpr::parse(j.at("scalar").get<std::string>());
    int d = 0;
    for (auto& v : j.at("combine")) e.combine.push_back(combine_from_name(v.get<std::string>(), ++d));

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
    e.scalar.typecheck(ctx);
    e.validate_structure();
    return e;
  });
}

std::string computation_to_json(const HighLevelExpr& e) {
  json j;
  j["name"] = e.name;
  j["dims"] = e.dim_names;
  j["sizes"] = e.sizes;
  auto view_json = [](const ViewSpec& v) {
    json arr = json::array();
    for (auto& b : v.buffers) {
      json jb;
      jb["name"] = b.name;
      jb["type"] = type_name(b.type);
      jb["rank"] = b.rank;
      json acc = json::array();
      for (auto& a : b.accesses) acc.push_back(a.to_string());
      jb["accesses"] = std::move(acc);
      arr.push_back(std::move(jb));
    }
    return arr;
  };
  j["inputs"] = view_json(e.input_view);
  j["outputs"] = view_json(e.output_view);
  j["scalar"] = e.scalar.to_string();
  json comb = json::array();
  for (auto& op : e.combine) comb.push_back(op.to_string());
  j["combine"] = std::move(comb);
  return j.dump(2) + "\n";
}

RefData parse_ref_json(const std::string& text, const HighLevelExpr& e) {
  json j = parse_text(text, "reference data");
  return guarded("reference data", [&] {
    RefData r;
    auto load = [&](const char* key, const ViewSpec& view, std::vector<std::shared_ptr<Buffer>>& out) {
      const json& g = j.at(key);
      for (auto& vb : view.buffers) {
        if (!g.contains(vb.name))
          fail("ParseError", std::string(key) + ": no data for buffer '" + vb.name + "'");
        out.push_back(buffer_from_json(g.at(vb.name), vb, std::string(key) + "." + vb.name));
      }
    };
    load("inputs", e.input_view, r.inputs);
    load("outputs", e.output_view, r.outputs);
    return r;
  });
}

std::string ref_to_json(const HighLevelExpr& e, const std::vector<std::shared_ptr<Buffer>>& inputs,
                        const std::vector<std::shared_ptr<Buffer>>& outputs) {
  json j;
  auto store = [&](const char* key, const ViewSpec& view, const std::vector<std::shared_ptr<Buffer>>& bufs) {
    json g;
    for (size_t b = 0; b < view.buffers.size() && b < bufs.size(); ++b)
      g[view.buffers[b].name] = buffer_to_json(*bufs[b]);
    j[key] = std::move(g);
  };
  store("inputs", e.input_view, inputs);
  store("outputs", e.output_view, outputs);
  return j.dump(2) + "\n";
}

TuningConfig parse_config_json(const std::string& text, const HighLevelExpr& e, const AsmModel& model) {
  json j = parse_text(text, "config");
  return guarded("config", [&] { return config_from_json(j, e, model); });
}

std::string config_to_json(const TuningConfig& c, const HighLevelExpr& e, const AsmModel& model) {
  json j;
  j["num_parts"] = c.num_parts;
  auto ord_json = [](const std::vector<MdhLevel>& v) {
    json arr = json::array();
    for (auto& l : v) arr.push_back(level_pair(l));
    return arr;
  };
  j["ord_de"] = ord_json(c.ord_de);
  j["ord_scalar"] = ord_json(c.ord_scalar);
  j["ord_re"] = ord_json(c.ord_re);
  auto ass_json = [&](const std::vector<AsmLevel>& v) {
    json arr = json::array();
    for (auto& l : v) arr.push_back(json::array({model.layer_name(l.layer), l.dim}));
    return arr;
  };
  j["ass_de"] = ass_json(c.ass_de);
  j["ass_scalar"] = ass_json(c.ass_scalar);
  j["ass_re"] = ass_json(c.ass_re);
  auto mem_phase_json = [&](const ViewSpec& view, const std::vector<std::vector<int>>& m) {
    json g;
    for (size_t b = 0; b < view.buffers.size() && b < m.size(); ++b) {
      json row = json::array();
      for (int r : m[b]) row.push_back(model.region_name(r));
      g[view.buffers[b].name] = std::move(row);
    }
    return g;
  };
  j["mem_de"] = mem_phase_json(e.input_view, c.mem_de);
  j["mem_re"] = mem_phase_json(e.output_view, c.mem_re);
  auto layout_phase_json = [&](const ViewSpec& view, const std::vector<std::vector<std::vector<int>>>& m) {
    json g;
    for (size_t b = 0; b < view.buffers.size() && b < m.size(); ++b) g[view.buffers[b].name] = m[b];
    return g;
  };
  j["layout_de"] = layout_phase_json(e.input_view, c.layout_de);
  j["layout_re"] = layout_phase_json(e.output_view, c.layout_re);
  auto mem_scalar_json = [&](const ViewSpec& view, const std::vector<int>& m) {
    json g;
    for (size_t b = 0; b < view.buffers.size() && b < m.size(); ++b)
      g[view.buffers[b].name] = model.region_name(m[b]);
    return g;
  };
  j["mem_scalar_in"] = mem_scalar_json(e.input_view, c.mem_scalar_in);
  j["mem_scalar_out"] = mem_scalar_json(e.output_view, c.mem_scalar_out);
  auto layout_scalar_json = [&](const ViewSpec& view, const std::vector<std::vector<int>>& m) {
    json g;
    for (size_t b = 0; b < view.buffers.size() && b < m.size(); ++b) g[view.buffers[b].name] = m[b];
    return g;
  };
  j["layout_scalar_in"] = layout_scalar_json(e.input_view, c.layout_scalar_in);
  j["layout_scalar_out"] = layout_scalar_json(e.output_view, c.layout_scalar_out);
  j["c_dev"] = c.c_dev;
  return j.dump(2) + "\n";
}

Fixture parse_fixture_json(const std::string& text) {
  json j = parse_text(text, "fixture");
  return guarded("fixture", [&] {
    Fixture f;
    f.name = j.at("name").get<std::string>();
    f.spec_name = j.at("spec").get<std::string>();
    if (j.at("model").is_string())
      f.model = preset(j.at("model").get<std::string>());
    else
      f.model = asm_from_json(j.at("model"));
    for (auto& v : j.at("sizes")) f.sizes.push_back(v.get<int64_t>());
    HighLevelExpr e = bundled_computation(f.spec_name);
    if (f.sizes.size() != e.sizes.size())
      fail("ParseError", "fixture '" + f.name + "': " + std::to_string(f.sizes.size()) + " sizes for " +
                             std::to_string(e.sizes.size()) + " dimensions of '" + f.spec_name + "'");
    e.sizes = f.sizes;
    f.config = config_from_json(j.at("config"), e, f.model);
    return f;
  });
}

AsmModel parse_asm_json(const std::string& text) {
  json j = parse_text(text, "ASM description");
  return guarded("ASM description", [&] { return asm_from_json(j); });
}

AsmModel resolve_asm(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return parse_asm_json(arg);
  for (auto& n : preset_names())
    if (n == arg) return preset(arg);
  std::ifstream in(arg);
  if (in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_asm_json(ss.str());
  }
  return preset(arg); // throws UnknownPreset listing the presets
}

HighLevelExpr bundled_computation(const std::string& name) {
  for (auto& entry : bundled::computations())
    if (entry.name == name) return parse_computation_json(entry.content);
  std::string known;
  for (auto& entry : bundled::computations()) known += (known.empty() ? "" : ", ") + entry.name;
  fail("ParseError", "no bundled computation named '" + name + "' (bundled: " + known + ")");
}

bool has_bundled_computation(const std::string& name) {
  for (auto& entry : bundled::computations())
    if (entry.name == name) return true;
  return false;
}

} // namespace mdh
