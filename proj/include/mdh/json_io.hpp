#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mdh/asm_model.hpp"
#include "mdh/highlevel.hpp"
#include "mdh/tuning.hpp"

namespace mdh {

// All parsers throw ParseError with a short path-like context in the message.

// Computation spec: name, dims, sizes, inputs/outputs with typed buffers and
// affine access strings, scalar function text, one combine op per dimension
// ("cc", "pw:<op>", "ps:<op>"). The result is structure-validated.
HighLevelExpr parse_computation_json(const std::string& text);
std::string computation_to_json(const HighLevelExpr& e);

// Reference data: {"inputs": {name: {"dims": [...], "data": [...]}},
// "outputs": {...}}. Buffers are matched to the expression's views by name
// and type; flat data is row-major.
struct RefData {
  std::vector<std::shared_ptr<Buffer>> inputs;
  std::vector<std::shared_ptr<Buffer>> outputs;
};
RefData parse_ref_json(const std::string& text, const HighLevelExpr& e);
std::string ref_to_json(const HighLevelExpr& e, const std::vector<std::shared_ptr<Buffer>>& inputs,
                        const std::vector<std::shared_ptr<Buffer>>& outputs);

// Tuning configuration. Orders and assignments are [layer, dim] pairs,
// outermost first / by level rank; region entries are 1-based ids or region
// names; layouts are 1-based permutations. mem_* / layout_* are keyed by
// buffer name. Missing mem/layout entries default to region 1 and identity.
TuningConfig parse_config_json(const std::string& text, const HighLevelExpr& e, const AsmModel& model);
std::string config_to_json(const TuningConfig& c, const HighLevelExpr& e, const AsmModel& model);

// Fixture file: {"name", "model" (preset or inline), "spec" (bundled
// computation name), "sizes", "config"; "provenance" is ignored}.
Fixture parse_fixture_json(const std::string& text);

// Inline ASM description {"name"?, "mem": [...], "core": [...]}.
AsmModel parse_asm_json(const std::string& text);

// Resolves --asm style input: preset name, inline JSON (starts with '{'),
// or a path to a JSON file.
AsmModel resolve_asm(const std::string& arg);

// Bundled computation by name (UnknownFixture-style lookup: ParseError lists
// the known names when absent).
HighLevelExpr bundled_computation(const std::string& name);
bool has_bundled_computation(const std::string& name);

} // namespace mdh
