#pragma once

#include <string>
#include <vector>

#include "mdh/error.hpp"

namespace mdh {

// Layered abstract system model: named memory layers (outermost first), then
// named core layers. Layer ids run 1..L in declaration order, memory first.
// Core counts and memory capacities are deliberately not modeled; capacity
// limits enter only through tuning-time model constraints.
struct AsmModel {
  std::string name;
  std::vector<std::string> mem_layers;
  std::vector<std::string> core_layers;

  int mem_count() const { return static_cast<int>(mem_layers.size()); }
  int core_count() const { return static_cast<int>(core_layers.size()); }
  int layer_count() const { return mem_count() + core_count(); }

  const std::string& layer_name(int id) const;
  int layer_id(const std::string& name) const;     // -1 if absent
  int region_count() const { return mem_count(); } // memory regions = memory layers
  const std::string& region_name(int id) const { return layer_name(id); }
  int region_id(const std::string& name) const;    // -1 if absent
};

enum class LevelKind { Memory, Core };

struct MdhLevel {
  int layer = 1;
  int dim = 1;
  bool operator==(const MdhLevel& o) const { return layer == o.layer && dim == o.dim; }
  bool operator<(const MdhLevel& o) const {
    return layer != o.layer ? layer < o.layer : dim < o.dim;
  }
};

struct AsmLevel {
  int layer = 1;
  int dim = 1;
  bool operator==(const AsmLevel& o) const { return layer == o.layer && dim == o.dim; }
};

AsmModel preset(const std::string& name);               // UnknownPreset
LevelKind level_kind(const AsmModel& model, int layer); // OutOfRange
std::vector<std::string> preset_names();

// Lexicographic rank of an MDH level within an L-layer, D-dimension level set.
inline int level_rank(const MdhLevel& l, int D) { return (l.layer - 1) * D + (l.dim - 1); }
inline MdhLevel level_from_rank(int rank, int D) { return {rank / D + 1, rank % D + 1}; }

} // namespace mdh
