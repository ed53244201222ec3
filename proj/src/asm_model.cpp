#include "mdh/asm_model.hpp"

namespace mdh {

const std::string& AsmModel::layer_name(int id) const {
  if (id < 1 || id > layer_count()) fail("OutOfRange", "layer id " + std::to_string(id) + " not in 1.." + std::to_string(layer_count()));
  if (id <= mem_count()) return mem_layers[static_cast<size_t>(id - 1)];
  return core_layers[static_cast<size_t>(id - 1 - mem_count())];
}

int AsmModel::layer_id(const std::string& n) const {
  for (int id = 1; id <= layer_count(); ++id)
    if (layer_name(id) == n) return id;
  return -1;
}

int AsmModel::region_id(const std::string& n) const {
  for (int id = 1; id <= mem_count(); ++id)
    if (mem_layers[static_cast<size_t>(id - 1)] == n) return id;
  return -1;
}

AsmModel preset(const std::string& name) {
  if (name == "OpenMP")
    return {name, {"MM", "L2", "L1"}, {"COR"}};
  if (name == "OpenMP+L3")
    return {name, {"MM", "L3", "L2", "L1"}, {"COR"}};
  if (name == "OpenMP+L3+SIMD")
    return {name, {"MM", "L3", "L2", "L1"}, {"COR", "SIMD"}};
  if (name == "CUDA")
    return {name, {"DM", "SM", "RM"}, {"SMX", "CC"}};
  if (name == "CUDA+WRP")
    return {name, {"DM", "SM", "RM"}, {"SMX", "WRP", "CC"}};
  if (name == "OpenCL")
    return {name, {"GM", "LM", "PM"}, {"CU", "PE"}};
  if (name == "MultiGPU")
    return {name, {"HM", "DM", "SM", "RM"}, {"GPU", "SMX", "CC"}};
  if (name == "MultiNodeMultiGPU")
    return {name, {"NM", "HM", "DM", "SM", "RM"}, {"NOD", "GPU", "SMX", "CC"}};
  if (name == "Artificial2+1")
    return {name, {"HM", "L1"}, {"COR"}};
  fail("UnknownPreset", "no abstract system model preset named '" + name + "'");
}

LevelKind level_kind(const AsmModel& model, int layer) {
  if (layer < 1 || layer > model.layer_count())
    fail("OutOfRange", "layer id " + std::to_string(layer) + " not in 1.." + std::to_string(model.layer_count()));
  return layer <= model.mem_count() ? LevelKind::Memory : LevelKind::Core;
}

std::vector<std::string> preset_names() {
  return {"OpenMP",  "OpenMP+L3", "OpenMP+L3+SIMD",   "CUDA",         "CUDA+WRP",
          "OpenCL",  "MultiGPU",  "MultiNodeMultiGPU", "Artificial2+1"};
}

} // namespace mdh
