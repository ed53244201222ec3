#include "mdh/interpreter.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"

#include "engine.hpp"

namespace mdh {

namespace {

std::string dim_letter(int d) {
  switch (d) {
    case 1: return "x";
    case 2: return "y";
    case 3: return "z";
    default: return "d" + std::to_string(d);
  }
}

std::string level_label(const MdhLevel& l) {
  return "(" + std::to_string(l.layer) + "," + dim_letter(l.dim) + ")";
}

int resolve_region(const AsmModel& model, const std::string& name) {
  int id = model.region_id(name);
  if (id < 0) fail("OutOfRange", "unknown memory region '" + name + "'");
  return id;
}

int64_t step_fanout(const AsmModel& model, const StepTag& tag, int64_t parts) {
  int layer = model.layer_id(tag.layer);
  if (layer < 0) fail("OutOfRange", "unknown layer '" + tag.layer + "'");
  return level_kind(model, layer) == LevelKind::Memory ? parts : 1;
}

int64_t footprint(const std::vector<int64_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), int64_t{1}, std::multiplies<int64_t>());
}

void charge(TraceStep& st, int region_read, int region_written, int64_t n) {
  st.elements_read += n;
  st.elements_written += n;
  st.region_traffic[region_read] += n;
  st.region_traffic[region_written] += n;
}

bool same_staging(const BufferStaging& a, const BufferStaging& b) {
  return a.region == b.region && a.layout == b.layout;
}

engine::Plan plan_from(const LowLevelExpr& ll, const HighLevelExpr& expr) {
  engine::Plan plan;
  std::vector<int64_t> cum(static_cast<size_t>(expr.dim_count()), 1);
  for (const MdhLevel& lv : ll.config.ord_re) {
    int64_t parts = ll.config.parts(lv);
    size_t d = static_cast<size_t>(lv.dim - 1);
    cum[d] *= parts;
    if (expr.sizes[d] % cum[d] != 0)
      fail("InvalidConfig", "part counts do not divide size of dimension " + std::to_string(lv.dim));
    plan.loops.push_back({lv.dim, parts, expr.sizes[d] / cum[d]});
  }
  return plan;
}

} // namespace

ExecTrace simulate_trace(const LowLevelExpr& ll, const HighLevelExpr& expr) {
  if (!ll.computation.empty() && ll.computation != expr.name)
    fail("InvalidConfig",
         "lowered form is for '" + ll.computation + "', expression is '" + expr.name + "'");
  size_t n_in = expr.input_view.buffers.size();
  size_t n_out = expr.output_view.buffers.size();
  if (ll.de_steps.size() < 2 || !ll.de_steps.front().view_stage || ll.re_steps.size() < 2 ||
      !ll.re_steps.back().view_stage)
    fail("InvalidConfig", "lowered form lacks view stages or tagged steps");
  for (size_t k = 1; k < ll.de_steps.size(); ++k)
    if (ll.de_steps[k].staging.size() != n_in)
      fail("InvalidConfig", "de step stages a different buffer set than the input view");
  for (size_t k = 0; k + 1 < ll.re_steps.size(); ++k)
    if (ll.re_steps[k].staging.size() != n_out)
      fail("InvalidConfig", "re step stages a different buffer set than the output view");
  if (ll.scalar_step.in_staging.size() != n_in || ll.scalar_step.out_staging.size() != n_out)
    fail("InvalidConfig", "scalar step stages a different buffer set than the views");

  const AsmModel& model = ll.model;
  ExecTrace trace;
  trace.computation = expr.name;

  std::vector<int64_t> in_fp, out_fp;
  for (const auto& dims : infer_buffer_sizes(expr.input_view, expr.full_ranges()))
    in_fp.push_back(footprint(dims));
  for (const auto& dims : infer_buffer_sizes(expr.output_view, collapsed_ranges(expr)))
    out_fp.push_back(footprint(dims));
  int64_t n_total = footprint(expr.sizes);

  int64_t de_fanout = 1, scalar_fanout = 1, re_fanout = 1;

  // De-composition: the view stage materializes every input footprint into
  // the outermost staging; later steps move a buffer only when its region or
  // layout changes between adjacent levels.
  for (size_t k = 0; k < ll.de_steps.size(); ++k) {
    const PhaseStep& st = ll.de_steps[k];
    TraceStep ts;
    if (st.view_stage) {
      ts.label = "iv";
      const PhaseStep& outer = ll.de_steps[1];
      for (size_t b = 0; b < in_fp.size(); ++b)
        charge(ts, 1, resolve_region(model, outer.staging[b].region), in_fp[b]);
    } else {
      ts.label = "de" + level_label(st.level);
      ts.parallel = step_fanout(model, st.tag, ll.config.parts(st.level));
      de_fanout *= ts.parallel;
      if (k >= 2) {
        const PhaseStep& prev = ll.de_steps[k - 1];
        for (size_t b = 0; b < in_fp.size(); ++b)
          if (!same_staging(prev.staging[b], st.staging[b]))
            charge(ts, resolve_region(model, prev.staging[b].region),
                   resolve_region(model, st.staging[b].region), in_fp[b]);
      }
    }
    trace.steps.push_back(std::move(ts));
  }

  // Scalar phase: every index point reads each access once from the scalar
  // input region and writes each output component once to the scalar output
  // region.
  {
    TraceStep ts;
    ts.label = "scalar";
    for (size_t b = 0; b < expr.input_view.buffers.size(); ++b) {
      int64_t n = n_total * static_cast<int64_t>(expr.input_view.buffers[b].accesses.size());
      ts.elements_read += n;
      ts.region_traffic[resolve_region(model, ll.scalar_step.in_staging[b].region)] += n;
    }
    for (size_t b = 0; b < expr.output_view.buffers.size(); ++b) {
      int64_t n = n_total * static_cast<int64_t>(expr.output_view.buffers[b].accesses.size());
      ts.elements_written += n;
      ts.region_traffic[resolve_region(model, ll.scalar_step.out_staging[b].region)] += n;
    }
    const int D = expr.dim_count();
    for (size_t r = 0; r < ll.scalar_step.ass.size(); ++r)
      scalar_fanout *=
          step_fanout(model, ll.scalar_step.ass[r], ll.config.parts(level_from_rank(static_cast<int>(r), D)));
    ts.parallel = scalar_fanout;
    trace.steps.push_back(std::move(ts));
  }

  // Re-composition: partial results climb from the scalar output region
  // through the staging chain inner to outer, moving only on a region or
  // layout change; the view stage writes the final footprint back out.
  size_t tagged_re = ll.re_steps.size() - 1;
  for (size_t k = 0; k < ll.re_steps.size(); ++k) {
    const PhaseStep& st = ll.re_steps[k];
    TraceStep ts;
    if (st.view_stage) {
      ts.label = "ov";
      const PhaseStep& outer = ll.re_steps[0];
      for (size_t b = 0; b < out_fp.size(); ++b)
        charge(ts, resolve_region(model, outer.staging[b].region), 1, out_fp[b]);
    } else {
      ts.label = "re" + level_label(st.level);
      ts.parallel = step_fanout(model, st.tag, ll.config.parts(st.level));
      re_fanout *= ts.parallel;
      for (size_t b = 0; b < out_fp.size(); ++b) {
        const BufferStaging& inner = k + 1 < tagged_re
                                         ? ll.re_steps[k + 1].staging[b]
                                         : ll.scalar_step.out_staging[b];
        if (!same_staging(inner, st.staging[b]))
          charge(ts, resolve_region(model, inner.region),
                 resolve_region(model, st.staging[b].region), out_fp[b]);
      }
    }
    trace.steps.push_back(std::move(ts));
  }

  for (const TraceStep& ts : trace.steps) {
    trace.total_read += ts.elements_read;
    trace.total_written += ts.elements_written;
    for (const auto& [r, n] : ts.region_traffic) trace.region_traffic[r] += n;
  }
  trace.parallel_depth = de_fanout + scalar_fanout + re_fanout + 2;
  return trace;
}

std::pair<std::vector<std::shared_ptr<Buffer>>, ExecTrace> interpret(
    const LowLevelExpr& ll, const HighLevelExpr& expr,
    const std::vector<std::shared_ptr<Buffer>>& inputs) {
  ExecTrace trace = simulate_trace(ll, expr);
  std::vector<std::shared_ptr<Buffer>> outputs = engine::run(expr, inputs, plan_from(ll, expr));
  return {std::move(outputs), std::move(trace)};
}

std::string ExecTrace::to_json(const AsmModel& model) const {
  nlohmann::json j;
  j["computation"] = computation;
  j["steps"] = nlohmann::json::array();
  for (size_t i = 0; i < steps.size(); ++i) {
    const TraceStep& st = steps[i];
    nlohmann::json js;
    js["index"] = i;
    js["step"] = st.label;
    js["reads"] = st.elements_read;
    js["writes"] = st.elements_written;
    js["parallel"] = st.parallel;
    nlohmann::json regions = nlohmann::json::object();
    for (const auto& [r, n] : st.region_traffic) regions[model.region_name(r)] = n;
    js["regions"] = regions;
    j["steps"].push_back(js);
  }
  nlohmann::json totals;
  totals["reads"] = total_read;
  totals["writes"] = total_written;
  nlohmann::json regions = nlohmann::json::object();
  for (const auto& [r, n] : region_traffic) regions[model.region_name(r)] = n;
  totals["regions"] = regions;
  totals["parallel_depth"] = parallel_depth;
  j["totals"] = totals;
  return j.dump(2);
}

std::map<int, double> default_sim_weights(const AsmModel& model) {
  std::map<int, double> w;
  int m = model.mem_count();
  for (int r = 1; r <= m; ++r) w[r] = std::ldexp(1.0, m - r + 1);
  return w;
}

double cost(const ExecTrace& trace, const AsmModel& model, const std::map<int, double>& weights,
            double alpha) {
  double total = 0.0;
  for (const auto& [r, n] : trace.region_traffic) {
    auto it = weights.find(r);
    if (it == weights.end())
      fail("MissingWeight", "no weight for region '" + model.region_name(r) + "'");
    total += it->second * static_cast<double>(n);
  }
  return total + alpha * static_cast<double>(trace.parallel_depth);
}

} // namespace mdh
