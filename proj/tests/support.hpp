#pragma once

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mdh/bundled.hpp"
#include "mdh/highlevel.hpp"
#include "mdh/interpreter.hpp"
#include "mdh/json_io.hpp"
#include "mdh/lowering.hpp"
#include "mdh/rng.hpp"

namespace mdhtest {

inline std::string data_path(const std::string& rel) {
  return std::string(MDH_DATA_DIR) + "/" + rel;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Deterministic small-valued inputs sized by the expression's access footprint.
inline std::vector<std::shared_ptr<mdh::Buffer>> make_inputs(const mdh::HighLevelExpr& e,
                                                             uint64_t seed) {
  auto sizes = mdh::infer_buffer_sizes(e.input_view, e.full_ranges());
  mdh::Rng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  std::vector<std::shared_ptr<mdh::Buffer>> bufs;
  for (size_t b = 0; b < sizes.size(); ++b) {
    auto buf = std::make_shared<mdh::Buffer>(
        mdh::Buffer::make(sizes[b], e.input_view.buffers[b].type));
    for (auto& c : buf->data) {
      int64_t v = rng.below_i(11) - 5;
      if (c.type == mdh::ScalarType::Int64)
        c.i = v;
      else
        c.f = 0.25 * static_cast<double>(v);
    }
    std::fill(buf->defined.begin(), buf->defined.end(), 1);
    bufs.push_back(buf);
  }
  return bufs;
}

inline bool buffers_match(const std::vector<std::shared_ptr<mdh::Buffer>>& got,
                          const std::vector<std::shared_ptr<mdh::Buffer>>& want, double rel_tol,
                          std::string* why = nullptr) {
  auto complain = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (got.size() != want.size()) return complain("output buffer count differs");
  for (size_t b = 0; b < got.size(); ++b) {
    if (got[b]->dims != want[b]->dims) return complain("dims differ on buffer " + std::to_string(b));
    for (int64_t t = 0; t < got[b]->flat_size(); ++t) {
      if (got[b]->defined[static_cast<size_t>(t)] != want[b]->defined[static_cast<size_t>(t)])
        return complain("definedness differs at cell " + std::to_string(t));
      if (!got[b]->defined[static_cast<size_t>(t)]) continue;
      const auto& g = got[b]->data[static_cast<size_t>(t)];
      const auto& w = want[b]->data[static_cast<size_t>(t)];
      if (g.type == mdh::ScalarType::Int64) {
        if (g.i != w.i)
          return complain("buffer " + std::to_string(b) + " cell " + std::to_string(t) + ": " +
                          std::to_string(g.i) + " != " + std::to_string(w.i));
      } else if (!mdh::nearly_equal(g.f, w.f, rel_tol)) {
        return complain("buffer " + std::to_string(b) + " cell " + std::to_string(t) + ": " +
                        std::to_string(g.f) + " != " + std::to_string(w.f));
      }
    }
  }
  return true;
}

inline std::vector<std::shared_ptr<mdh::Buffer>> run_config(
    const mdh::HighLevelExpr& e, const mdh::AsmModel& model, const mdh::TuningConfig& cfg,
    const std::vector<std::shared_ptr<mdh::Buffer>>& inputs) {
  return mdh::interpret(mdh::lower(e, model, cfg), e, inputs).first;
}

// Bundled computations with every dimension size at most `cap`.
inline std::vector<std::string> small_computation_names(int64_t cap = 16) {
  std::vector<std::string> names;
  for (const auto& entry : mdh::bundled::computations()) {
    mdh::HighLevelExpr e = mdh::parse_computation_json(entry.content);
    bool small = true;
    for (int64_t s : e.sizes) small = small && s <= cap;
    if (small) names.push_back(e.name);
  }
  return names;
}

} // namespace mdhtest
