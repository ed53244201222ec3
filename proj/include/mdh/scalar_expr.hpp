#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdh/value.hpp"

namespace mdh {

enum class ExprKind { Lit, In, Idx, Add, Sub, Mul, Div, Min, Max, Abs, Cmp, Select };

struct ExprNode {
  ExprKind kind = ExprKind::Lit;
  bool float_lit = false; // literal written with '.' or exponent
  int64_t ival = 0;
  double fval = 0.0;
  int buf = 0; // In: input buffer (1-based)
  int acc = 0; // In: access within buffer (1-based)
  int dim = 0; // Idx: dimension (1-based)
  std::vector<ExprNode> args;
  ScalarType type = ScalarType::Int64; // filled by typecheck
};

// One statement `out(buf, acc) = expr`. The scalar function's result tuple has
// one component per declared output access, in (buf, acc) declaration order;
// every component must be assigned exactly once.
struct OutAssign {
  int buf = 1;
  int acc = 1;
  ExprNode expr;
};

struct ScalarTypeContext {
  std::vector<ScalarType> in_types;  // per input buffer
  std::vector<int> in_access_counts; // per input buffer
  std::vector<ScalarType> out_types; // per output buffer
  std::vector<int> out_access_counts;
  int dim_count = 0;
};

struct ScalarExpr {
  std::vector<OutAssign> assigns;

  // Parses `out(b,a) = <expr>; ...`. Operands: in(b,a), idx(d), integer and
  // decimal literals, infix + - * / with usual precedence, unary minus, and
  // calls min/max/abs/cmp/select. cmp yields -1/0/1 as Int64; select(c,x,y)
  // picks x when c != 0. Throws ParseError with line/column on bad input.
  static ScalarExpr parse(const std::string& text);

  std::string to_string() const;

  // Resolves literal types against the declared buffer types and checks the
  // assignment set covers each output access exactly once.
  void typecheck(const ScalarTypeContext& ctx);
};

struct ScalarEvalEnv {
  std::function<ScalarValue::Comp(int buf, int acc)> in; // 1-based
  std::function<int64_t(int dim)> idx;                   // 1-based
};

ScalarValue::Comp eval_expr(const ExprNode& e, const ScalarEvalEnv& env);
ScalarValue eval_scalar(const ScalarExpr& f, const ScalarEvalEnv& env);

} // namespace mdh
