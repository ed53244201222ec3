#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mdh/autotuner.hpp"
#include "mdh/bundled.hpp"
#include "mdh/codegen.hpp"
#include "mdh/error.hpp"
#include "mdh/interpreter.hpp"
#include "mdh/json_io.hpp"
#include "mdh/lowering.hpp"
#include "mdh/tuning.hpp"

namespace {

using namespace mdh;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("ParseError", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) fail("ParseError", "cannot write '" + out_path + "'");
  out << text;
}

HighLevelExpr load_spec(const std::string& arg) {
  if (arg.empty()) fail("ParseError", "--spec is required (bundled name or a JSON file)");
  if (has_bundled_computation(arg)) return bundled_computation(arg);
  return parse_computation_json(slurp(arg));
}

// Deterministic small-range inputs; every value fits both element types exactly.
std::vector<std::shared_ptr<Buffer>> make_inputs(const HighLevelExpr& e, uint64_t seed) {
  std::vector<std::vector<int64_t>> dims = infer_buffer_sizes(e.input_view, e.full_ranges());
  std::vector<std::shared_ptr<Buffer>> out;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (size_t b = 0; b < e.input_view.buffers.size(); ++b) {
    const ViewBuffer& vb = e.input_view.buffers[b];
    auto buf = std::make_shared<Buffer>(Buffer::make(dims[b], vb.type));
    for (int64_t t = 0; t < buf->flat_size(); ++t) {
      int64_t v = static_cast<int64_t>(rng.below(11)) - 5;
      buf->data[static_cast<size_t>(t)].type = vb.type;
      if (vb.type == ScalarType::Int64)
        buf->data[static_cast<size_t>(t)].i = v;
      else
        buf->data[static_cast<size_t>(t)].f = 0.25 * static_cast<double>(v);
      buf->defined[static_cast<size_t>(t)] = 1;
    }
    out.push_back(std::move(buf));
  }
  return out;
}

bool buffers_match(const Buffer& got, const Buffer& want, std::string* why) {
  if (got.dims != want.dims) {
    *why = "buffer shape differs";
    return false;
  }
  for (int64_t t = 0; t < got.flat_size(); ++t) {
    size_t u = static_cast<size_t>(t);
    if (got.defined[u] != want.defined[u]) {
      *why = "cell " + std::to_string(t) + ": definedness differs";
      return false;
    }
    if (!got.defined[u]) continue;
    if (got.elem_type == ScalarType::Int64) {
      if (got.data[u].i != want.data[u].i) {
        *why = "cell " + std::to_string(t) + ": " + std::to_string(got.data[u].i) + " != " +
               std::to_string(want.data[u].i);
        return false;
      }
    } else if (!nearly_equal(got.data[u].f, want.data[u].f, 1e-12)) {
      *why = "cell " + std::to_string(t) + ": " + std::to_string(got.data[u].f) + " != " +
             std::to_string(want.data[u].f);
      return false;
    }
  }
  return true;
}

struct Job {
  HighLevelExpr expr;
  AsmModel model;
  ModelConstraintSet constraints;
  std::vector<std::pair<std::string, TuningConfig>> configs;
};

// Resolves the spec/model/config trio shared by verify, lower, and emit.
Job load_job(const std::string& spec_arg, const std::string& asm_arg, const std::string& config_path,
             int random_n, const std::string& fixture_name, uint64_t seed) {
  Job job;
  if (!fixture_name.empty()) {
    Fixture f = fixture(fixture_name);
    job.expr = bundled_computation(f.spec_name);
    job.expr.sizes = f.sizes;
    job.model = f.model;
    job.constraints = ModelConstraintSet::for_model(job.model);
    job.configs.emplace_back(f.name, f.config);
    return job;
  }
  job.expr = load_spec(spec_arg);
  job.model = resolve_asm(asm_arg);
  job.constraints = ModelConstraintSet::for_model(job.model);
  if (!config_path.empty()) {
    job.configs.emplace_back(config_path, parse_config_json(slurp(config_path), job.expr, job.model));
  } else {
    int n = random_n > 0 ? random_n : 1;
    for (int k = 0; k < n; ++k)
      job.configs.emplace_back("random:" + std::to_string(k),
                               sample(job.expr, job.model, job.constraints, seed + static_cast<uint64_t>(k)));
  }
  return job;
}

int cmd_verify(const Job& job, uint64_t seed) {
  std::vector<std::shared_ptr<Buffer>> inputs = make_inputs(job.expr, seed);
  std::vector<std::shared_ptr<Buffer>> want = reference_execute(job.expr, inputs);
  int failed = 0;
  for (size_t k = 0; k < job.configs.size(); ++k) {
    const auto& [label, cfg] = job.configs[k];
    ValidationReport rep = validate(cfg, job.expr, job.model, job.constraints);
    if (!rep.ok) {
      const Violation& v = rep.violations.front();
      std::cout << "config " << label << ": INVALID (" << v.code << ": " << v.message << ")\n";
      ++failed;
      continue;
    }
    LowLevelExpr ll = lower(job.expr, job.model, cfg);
    auto [got, trace] = interpret(ll, job.expr, inputs);
    bool ok = true;
    std::string why;
    for (size_t b = 0; b < want.size() && ok; ++b)
      if (!buffers_match(*got[b], *want[b], &why)) {
        ok = false;
        why = "buffer '" + job.expr.output_view.buffers[b].name + "' " + why;
      }
    if (ok) {
      std::cout << "config " << label << ": pass (hash=" << std::hex
                << config_hash(cfg, job.expr, job.model) << std::dec << ")\n";
    } else {
      std::cout << "config " << label << ": FAIL (" << why << ")\n";
      ++failed;
    }
  }
  if (failed) {
    std::cout << failed << "/" << job.configs.size() << " configurations failed\n";
    return 2;
  }
  std::cout << job.configs.size() << "/" << job.configs.size() << " configurations pass\n";
  return 0;
}

int cmd_lower(const Job& job, const std::string& out_path) {
  const auto& [label, cfg] = job.configs.front();
  ValidationReport rep = validate(cfg, job.expr, job.model, job.constraints);
  if (!rep.ok) {
    const Violation& v = rep.violations.front();
    std::cerr << "config " << label << " is invalid (" << v.code << ": " << v.message << ")\n";
    return 2;
  }
  emit_text(out_path, lower(job.expr, job.model, cfg).pretty());
  return 0;
}

int cmd_emit(const Job& job, const std::string& out_path, bool gate_compile, uint64_t seed) {
  const auto& [label, cfg] = job.configs.front();
  ValidationReport rep = validate(cfg, job.expr, job.model, job.constraints);
  if (!rep.ok) {
    const Violation& v = rep.violations.front();
    std::cerr << "config " << label << " is invalid (" << v.code << ": " << v.message << ")\n";
    return 2;
  }
  LowLevelExpr ll = lower(job.expr, job.model, cfg);
  std::string source = emit(ll, job.expr);
  emit_text(out_path, source);
  if (!gate_compile) return 0;
  std::vector<std::shared_ptr<Buffer>> inputs = make_inputs(job.expr, seed);
  std::vector<std::shared_ptr<Buffer>> want = reference_execute(job.expr, inputs);
  try {
    VerifyInfo info = verify_emitted(source, job.expr, inputs, want);
    std::cerr << "gate passed: compiled with " << info.compiler << (info.openmp ? " (OpenMP)" : "") << "\n";
  } catch (const Error& e) {
    if (e.code == "CompilerUnavailable") {
      std::cerr << "gate skipped: no C compiler available\n";
      return 0;
    }
    throw;
  }
  return 0;
}

int cmd_tune(const std::string& spec_arg, const std::string& asm_arg, int budget,
             const std::string& objective_name, uint64_t seed, const std::string& out_path,
             const std::string& history_path) {
  HighLevelExpr expr = load_spec(spec_arg);
  AsmModel model = resolve_asm(asm_arg);
  ModelConstraintSet constraints = ModelConstraintSet::for_model(model);
  Objective objective;
  if (objective_name == "simcost")
    objective = Objective::SimCost;
  else if (objective_name == "compiled")
    objective = Objective::CompiledTime;
  else
    fail("InvalidConfig", "--objective must be simcost or compiled, got '" + objective_name + "'");
  TuneResult result;
  try {
    result = tune(expr, model, constraints, budget, objective, seed);
  } catch (const Error& e) {
    if (e.code == "CompilerUnavailable") {
      std::cerr << "tuning skipped: no C compiler available\n";
      return 0;
    }
    throw;
  }
  std::cout << "evaluations: " << result.history.size() << "\n";
  std::cout << "best objective: " << result.best_objective << "\n";
  std::cout << "best hash: " << std::hex << config_hash(result.best, expr, model) << std::dec << "\n";
  if (!history_path.empty()) emit_text(history_path, history_csv(result));
  std::string best_json = config_to_json(result.best, expr, model);
  if (!out_path.empty())
    emit_text(out_path, best_json);
  else
    std::cout << best_json;
  return 0;
}

int cmd_examples() {
  for (const auto& entry : bundled::computations()) {
    HighLevelExpr e = parse_computation_json(entry.content);
    std::cout << e.name << ": dims";
    for (size_t d = 0; d < e.sizes.size(); ++d)
      std::cout << (d ? "x" : " ") << e.sizes[d];
    std::cout << ", combine [";
    for (size_t d = 0; d < e.combine.size(); ++d)
      std::cout << (d ? ", " : "") << e.combine[d].to_string();
    std::cout << "], " << type_name(e.input_view.buffers.front().type) << "\n";
  }
  for (const auto& entry : bundled::fixtures()) {
    Fixture f = parse_fixture_json(entry.content);
    std::cout << "fixture " << f.name << ": " << f.spec_name << " on " << f.model.name << "\n";
  }
  return 0;
}

int exit_code_for(const Error& e) {
  if (e.code == "ParseError") return 3;
  for (const char* c : {"InvalidConfig", "Mismatch", "NoValidConfigFound", "NonDivisible",
                        "MixedIncompatibleOperators", "UnknownPreset", "UnknownFixture"})
    if (e.code == c) return 2;
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-dimensional homomorphism pipeline"};
  app.require_subcommand(1);

  std::string spec_arg, asm_arg = "OpenMP", config_path, fixture_name, out_path, history_path;
  std::string objective_name = "simcost";
  int random_n = 0;
  int budget = 20;
  uint64_t seed = 0;
  bool gate_compile = false;

  auto add_source = [&](CLI::App* sub) {
    sub->add_option("--spec", spec_arg, "bundled computation name or spec JSON file");
    sub->add_option("--asm", asm_arg, "ASM preset name, inline JSON, or file (default OpenMP)");
    sub->add_option("--config", config_path, "tuning configuration JSON file");
    sub->add_option("--random", random_n, "number of random configurations to sample");
    sub->add_option("--fixture", fixture_name, "bundled fixture name (overrides spec/asm/config)");
    sub->add_option("--seed", seed, "random seed (default 0)");
  };

  CLI::App* verify = app.add_subcommand("verify", "interpret configurations against the reference");
  add_source(verify);

  CLI::App* lower_cmd = app.add_subcommand("lower", "print the lowered expression");
  add_source(lower_cmd);
  lower_cmd->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* emit_cmd = app.add_subcommand("emit", "print the generated C kernel");
  add_source(emit_cmd);
  emit_cmd->add_option("--out", out_path, "output file (default stdout)");
  emit_cmd->add_flag("--gate-compile", gate_compile, "compile and check the kernel if a compiler exists");

  CLI::App* tune_cmd = app.add_subcommand("tune", "search the configuration space");
  tune_cmd->add_option("--spec", spec_arg, "bundled computation name or spec JSON file");
  tune_cmd->add_option("--asm", asm_arg, "ASM preset name, inline JSON, or file (default OpenMP)");
  tune_cmd->add_option("--budget", budget, "evaluation budget (default 20)");
  tune_cmd->add_option("--objective", objective_name, "simcost | compiled (default simcost)");
  tune_cmd->add_option("--seed", seed, "random seed (default 0)");
  tune_cmd->add_option("--out", out_path, "write the best configuration JSON here");
  tune_cmd->add_option("--history", history_path, "write the evaluation history CSV here");

  app.add_subcommand("examples", "list bundled computations and fixtures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  try {
    if (app.got_subcommand("examples")) return cmd_examples();
    if (app.got_subcommand("tune"))
      return cmd_tune(spec_arg, asm_arg, budget, objective_name, seed, out_path, history_path);
    Job job = load_job(spec_arg, asm_arg, config_path, random_n, fixture_name, seed);
    if (app.got_subcommand("verify")) return cmd_verify(job, seed);
    if (app.got_subcommand("lower")) return cmd_lower(job, out_path);
    if (app.got_subcommand("emit")) return cmd_emit(job, out_path, gate_compile, seed);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
