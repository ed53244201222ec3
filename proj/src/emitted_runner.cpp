#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mdh/codegen.hpp"

namespace mdh {

namespace {

namespace fs = std::filesystem;

std::string i64_c(int64_t v) { return std::to_string(v) + "LL"; }

std::string f64_c(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

int run_command(const std::string& cmd) { return std::system(cmd.c_str()); }

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("mdh_emit_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

} // namespace

std::string compile_and_run(const std::string& program, VerifyInfo* info) {
  TempDir dir;
  fs::path src = dir.path / "kernel_main.c";
  fs::path exe = dir.path / "kernel_main";
  fs::path log = dir.path / "cc.log";
  {
    std::ofstream f(src);
    f << program;
  }

  std::vector<std::string> compilers;
  if (const char* cc = std::getenv("CC"); cc && *cc) compilers.push_back(cc);
  compilers.push_back("cc");
  compilers.push_back("gcc");
  compilers.push_back("clang");

  bool built = false;
  for (const std::string& comp : compilers) {
    struct Attempt {
      const char* flags;
      bool openmp;
    };
    for (const Attempt& att : {Attempt{"-O2 -fopenmp -ffp-contract=off", true},
                               Attempt{"-O2 -ffp-contract=off", false}, Attempt{"-O2", false}}) {
      std::string cmd = comp + std::string(" ") + att.flags + " -o \"" + exe.string() + "\" \"" +
                        src.string() + "\" > \"" + log.string() + "\" 2>&1";
      if (run_command(cmd) == 0) {
        if (info) {
          info->compiler = comp;
          info->openmp = att.openmp;
        }
        built = true;
        break;
      }
    }
    if (built) break;
  }
  if (!built) fail("CompilerUnavailable", "no C compiler could build the emitted kernel");

  fs::path out_txt = dir.path / "out.txt";
  std::string run = "\"" + exe.string() + "\" > \"" + out_txt.string() + "\" 2>&1";
  if (run_command(run) != 0) fail("Mismatch", "emitted program did not exit cleanly");

  std::ifstream out_f(out_txt);
  std::ostringstream collected;
  collected << out_f.rdbuf();
  return collected.str();
}

VerifyInfo verify_emitted(const std::string& source, const HighLevelExpr& expr,
                          const std::vector<std::shared_ptr<Buffer>>& inputs,
                          const std::vector<std::shared_ptr<Buffer>>& expected,
                          double rel_tol) {
  if (inputs.size() != expr.input_view.buffers.size())
    fail("BufferTooSmall", "expected " + std::to_string(expr.input_view.buffers.size()) +
                               " input buffers, got " + std::to_string(inputs.size()));
  if (expected.size() != expr.output_view.buffers.size())
    fail("Mismatch", "expected " + std::to_string(expr.output_view.buffers.size()) +
                         " output buffers, got " + std::to_string(expected.size()));

  std::vector<std::vector<int64_t>> out_dims =
      infer_buffer_sizes(expr.output_view, collapsed_ranges(expr));

  std::ostringstream prog;
  prog << source << "\n#include <stdio.h>\n";
  for (size_t b = 0; b < inputs.size(); ++b) {
    const ViewBuffer& vb = expr.input_view.buffers[b];
    const Buffer& buf = *inputs[b];
    prog << "static const " << (vb.type == ScalarType::Int64 ? "long long" : "double") << " "
         << vb.name << "_data[" << std::max<int64_t>(1, buf.flat_size()) << "] = {";
    for (int64_t t = 0; t < buf.flat_size(); ++t) {
      if (t) prog << ", ";
      const ScalarValue::Comp& c = buf.data[static_cast<size_t>(t)];
      if (!buf.defined[static_cast<size_t>(t)])
        prog << (vb.type == ScalarType::Int64 ? "0LL" : "0.0");
      else
        prog << (vb.type == ScalarType::Int64 ? i64_c(c.i) : f64_c(c.f));
    }
    prog << "};\n";
  }
  std::vector<int64_t> out_sizes;
  for (size_t b = 0; b < expr.output_view.buffers.size(); ++b) {
    const ViewBuffer& vb = expr.output_view.buffers[b];
    int64_t sz = 1;
    for (int64_t d : out_dims[b]) sz *= d;
    out_sizes.push_back(sz);
    if (expected[b]->flat_size() != sz)
      fail("Mismatch", "expected buffer '" + vb.name + "' has " +
                           std::to_string(expected[b]->flat_size()) + " cells, kernel writes " +
                           std::to_string(sz));
    prog << "static " << (vb.type == ScalarType::Int64 ? "long long" : "double") << " " << vb.name
         << "_out[" << std::max<int64_t>(1, sz) << "];\n";
  }
  prog << "int main(void) {\n  mdh_kernel(";
  {
    bool first = true;
    for (const ViewBuffer& vb : expr.input_view.buffers) {
      if (!first) prog << ", ";
      first = false;
      prog << vb.name << "_data";
    }
    for (const ViewBuffer& vb : expr.output_view.buffers) {
      if (!first) prog << ", ";
      first = false;
      prog << vb.name << "_out";
    }
  }
  prog << ");\n";
  for (size_t b = 0; b < expr.output_view.buffers.size(); ++b) {
    const ViewBuffer& vb = expr.output_view.buffers[b];
    prog << "  for (long long t = 0; t < " << out_sizes[b] << "; ++t) printf(";
    if (vb.type == ScalarType::Int64)
      prog << "\"%lld\\n\", " << vb.name << "_out[t]";
    else
      prog << "\"%.17g\\n\", " << vb.name << "_out[t]";
    prog << ");\n";
  }
  prog << "  return 0;\n}\n";

  VerifyInfo info;
  std::istringstream out_f(compile_and_run(prog.str(), &info));
  for (size_t b = 0; b < expected.size(); ++b) {
    const ViewBuffer& vb = expr.output_view.buffers[b];
    const Buffer& want = *expected[b];
    for (int64_t t = 0; t < out_sizes[b]; ++t) {
      std::string line;
      if (!std::getline(out_f, line))
        fail("Mismatch", "emitted program printed fewer values than expected");
      if (!want.defined[static_cast<size_t>(t)]) continue;
      const ScalarValue::Comp& w = want.data[static_cast<size_t>(t)];
      if (vb.type == ScalarType::Int64) {
        int64_t got = std::strtoll(line.c_str(), nullptr, 10);
        if (got != w.i)
          fail("Mismatch", "buffer '" + vb.name + "' cell " + std::to_string(t) + ": emitted " +
                               std::to_string(got) + ", expected " + std::to_string(w.i));
      } else {
        double got = std::strtod(line.c_str(), nullptr);
        if (!nearly_equal(got, w.f, rel_tol))
          fail("Mismatch", "buffer '" + vb.name + "' cell " + std::to_string(t) + ": emitted " +
                               line + ", expected " + std::to_string(w.f));
      }
    }
  }
  return info;
}

} // namespace mdh
