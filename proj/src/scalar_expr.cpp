#include "mdh/scalar_expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "mdh/error.hpp"

namespace mdh {
namespace {

struct Lexer {
  const std::string& s;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  explicit Lexer(const std::string& text) : s(text) {}

  [[noreturn]] void die(const std::string& msg) const {
    fail("ParseError", msg + " at line " + std::to_string(line) + ", column " + std::to_string(col));
  }

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r')) {
      if (s[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++pos;
    }
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  void advance(size_t n) {
    pos += n;
    col += static_cast<int>(n);
  }

  bool eat(char c) {
    if (peek() != c) return false;
    advance(1);
    return true;
  }

  void expect(char c) {
    if (!eat(c)) die(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) advance(1);
    if (start == pos) die("expected identifier");
    return s.substr(start, pos - start);
  }

  ExprNode number() {
    skip_ws();
    size_t start = pos;
    bool is_float = false;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) advance(1);
    if (start == pos) die("expected number");
    if (pos < s.size() && s[pos] == '.') {
      is_float = true;
      advance(1);
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) advance(1);
    }
    if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
      is_float = true;
      advance(1);
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) advance(1);
      size_t digits = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) advance(1);
      if (digits == pos) die("expected exponent digits");
    }
    std::string text = s.substr(start, pos - start);
    ExprNode n;
    n.kind = ExprKind::Lit;
    n.float_lit = is_float;
    if (is_float) {
      n.fval = std::strtod(text.c_str(), nullptr);
      n.type = ScalarType::Float64;
    } else {
      n.ival = std::strtoll(text.c_str(), nullptr, 10);
      n.fval = static_cast<double>(n.ival);
      n.type = ScalarType::Int64;
    }
    return n;
  }

  int small_int() {
    ExprNode n = number();
    if (n.float_lit) die("expected integer");
    return static_cast<int>(n.ival);
  }
};

ExprNode parse_expr(Lexer& lx);

ExprNode make(ExprKind k, std::vector<ExprNode> args) {
  ExprNode n;
  n.kind = k;
  n.args = std::move(args);
  return n;
}

ExprNode parse_primary(Lexer& lx) {
  char c = lx.peek();
  if (c == '(') {
    lx.advance(1);
    ExprNode e = parse_expr(lx);
    lx.expect(')');
    return e;
  }
  if (c == '-') {
    lx.advance(1);
    ExprNode inner = parse_primary(lx);
    if (inner.kind == ExprKind::Lit) {
      inner.ival = -inner.ival;
      inner.fval = -inner.fval;
      return inner;
    }
    ExprNode zero;
    zero.kind = ExprKind::Lit;
    return make(ExprKind::Sub, {zero, std::move(inner)});
  }
  if (std::isdigit(static_cast<unsigned char>(c))) return lx.number();

  std::string name = lx.ident();
  if (name == "in") {
    lx.expect('(');
    ExprNode n;
    n.kind = ExprKind::In;
    n.buf = lx.small_int();
    lx.expect(',');
    n.acc = lx.small_int();
    lx.expect(')');
    return n;
  }
  if (name == "idx") {
    lx.expect('(');
    ExprNode n;
    n.kind = ExprKind::Idx;
    n.dim = lx.small_int();
    lx.expect(')');
    n.type = ScalarType::Int64;
    return n;
  }
  auto call = [&](ExprKind k, int arity) {
    lx.expect('(');
    std::vector<ExprNode> args;
    for (int i = 0; i < arity; ++i) {
      if (i > 0) lx.expect(',');
      args.push_back(parse_expr(lx));
    }
    lx.expect(')');
    return make(k, std::move(args));
  };
  if (name == "min") return call(ExprKind::Min, 2);
  if (name == "max") return call(ExprKind::Max, 2);
  if (name == "cmp") return call(ExprKind::Cmp, 2);
  if (name == "abs") return call(ExprKind::Abs, 1);
  if (name == "select") return call(ExprKind::Select, 3);
  lx.die("unknown function '" + name + "'");
}

ExprNode parse_term(Lexer& lx) {
  ExprNode e = parse_primary(lx);
  for (;;) {
    char c = lx.peek();
    if (c != '*' && c != '/') return e;
    lx.advance(1);
    ExprNode rhs = parse_primary(lx);
    e = make(c == '*' ? ExprKind::Mul : ExprKind::Div, {std::move(e), std::move(rhs)});
  }
}

ExprNode parse_expr(Lexer& lx) {
  ExprNode e = parse_term(lx);
  for (;;) {
    char c = lx.peek();
    if (c != '+' && c != '-') return e;
    lx.advance(1);
    ExprNode rhs = parse_term(lx);
    e = make(c == '+' ? ExprKind::Add : ExprKind::Sub, {std::move(e), std::move(rhs)});
  }
}

// Retypes an Int64 subtree as Float64. Only literal arithmetic can flex;
// typed leaves (in, idx, cmp) keep their declared type.
bool coerce_float(ExprNode& e) {
  switch (e.kind) {
    case ExprKind::Lit:
      if (e.float_lit) return true;
      e.fval = static_cast<double>(e.ival);
      e.type = ScalarType::Float64;
      return true;
    case ExprKind::In:
    case ExprKind::Idx:
    case ExprKind::Cmp:
      return e.type == ScalarType::Float64;
    case ExprKind::Select: {
      bool ok = coerce_float(e.args[1]) && coerce_float(e.args[2]);
      if (ok) e.type = ScalarType::Float64;
      return ok;
    }
    default: {
      for (auto& a : e.args)
        if (!coerce_float(a)) return false;
      e.type = ScalarType::Float64;
      return true;
    }
  }
}

ScalarType unify(ExprNode& a, ExprNode& b, const char* what) {
  if (a.type == b.type) return a.type;
  ExprNode& intside = a.type == ScalarType::Int64 ? a : b;
  if (!coerce_float(intside))
    fail("MixedTypes", std::string(what) + " mixes i64 and f64 operands");
  return ScalarType::Float64;
}

void type_expr(ExprNode& e, const ScalarTypeContext& ctx) {
  for (auto& a : e.args) type_expr(a, ctx);
  switch (e.kind) {
    case ExprKind::Lit:
      e.type = e.float_lit ? ScalarType::Float64 : ScalarType::Int64;
      break;
    case ExprKind::In: {
      int nbuf = static_cast<int>(ctx.in_types.size());
      if (e.buf < 1 || e.buf > nbuf)
        fail("IndexOutOfBounds", "in(" + std::to_string(e.buf) + ",_) references a missing input buffer");
      if (e.acc < 1 || e.acc > ctx.in_access_counts[static_cast<size_t>(e.buf - 1)])
        fail("IndexOutOfBounds", "in(" + std::to_string(e.buf) + "," + std::to_string(e.acc) + ") references a missing access");
      e.type = ctx.in_types[static_cast<size_t>(e.buf - 1)];
      break;
    }
    case ExprKind::Idx:
      if (e.dim < 1 || e.dim > ctx.dim_count)
        fail("DimOutOfRange", "idx(" + std::to_string(e.dim) + ") with " + std::to_string(ctx.dim_count) + " dimensions");
      e.type = ScalarType::Int64;
      break;
    case ExprKind::Abs:
      e.type = e.args[0].type;
      break;
    case ExprKind::Cmp:
      unify(e.args[0], e.args[1], "cmp");
      e.type = ScalarType::Int64;
      break;
    case ExprKind::Select:
      if (e.args[0].type != ScalarType::Int64)
        fail("MixedTypes", "select condition must be i64");
      e.type = unify(e.args[1], e.args[2], "select");
      break;
    default:
      e.type = unify(e.args[0], e.args[1], "arithmetic");
      break;
  }
}

void print_expr(const ExprNode& e, std::ostringstream& os) {
  auto binop = [&](const char* op) {
    os << '(';
    print_expr(e.args[0], os);
    os << ' ' << op << ' ';
    print_expr(e.args[1], os);
    os << ')';
  };
  auto callop = [&](const char* name) {
    os << name << '(';
    for (size_t i = 0; i < e.args.size(); ++i) {
      if (i) os << ", ";
      print_expr(e.args[i], os);
    }
    os << ')';
  };
  switch (e.kind) {
    case ExprKind::Lit:
      if (e.float_lit || e.type == ScalarType::Float64) {
        std::ostringstream num;
        num.precision(17);
        num << e.fval;
        std::string t = num.str();
        if (t.find('.') == std::string::npos && t.find('e') == std::string::npos &&
            t.find("inf") == std::string::npos && t.find("nan") == std::string::npos)
          t += ".0";
        os << t;
      } else {
        os << e.ival;
      }
      break;
    case ExprKind::In: os << "in(" << e.buf << ", " << e.acc << ")"; break;
    case ExprKind::Idx: os << "idx(" << e.dim << ")"; break;
    case ExprKind::Add: binop("+"); break;
    case ExprKind::Sub: binop("-"); break;
    case ExprKind::Mul: binop("*"); break;
    case ExprKind::Div: binop("/"); break;
    case ExprKind::Min: callop("min"); break;
    case ExprKind::Max: callop("max"); break;
    case ExprKind::Abs: callop("abs"); break;
    case ExprKind::Cmp: callop("cmp"); break;
    case ExprKind::Select: callop("select"); break;
  }
}

} // namespace

ScalarExpr ScalarExpr::parse(const std::string& text) {
  Lexer lx(text);
  ScalarExpr f;
  for (;;) {
    if (lx.peek() == '\0') break;
    std::string kw = lx.ident();
    if (kw != "out") lx.die("expected 'out'");
    lx.expect('(');
    OutAssign a;
    a.buf = lx.small_int();
    lx.expect(',');
    a.acc = lx.small_int();
    lx.expect(')');
    lx.expect('=');
    a.expr = parse_expr(lx);
    f.assigns.push_back(std::move(a));
    if (!lx.eat(';')) break;
  }
  if (lx.peek() != '\0') lx.die("trailing input");
  if (f.assigns.empty()) lx.die("expected at least one out(...) assignment");
  return f;
}

std::string ScalarExpr::to_string() const {
  std::ostringstream os;
  for (size_t i = 0; i < assigns.size(); ++i) {
    if (i) os << "; ";
    os << "out(" << assigns[i].buf << ", " << assigns[i].acc << ") = ";
    print_expr(assigns[i].expr, os);
  }
  return os.str();
}

void ScalarExpr::typecheck(const ScalarTypeContext& ctx) {
  std::vector<std::vector<uint8_t>> seen(ctx.out_types.size());
  for (size_t b = 0; b < ctx.out_types.size(); ++b)
    seen[b].assign(static_cast<size_t>(ctx.out_access_counts[b]), 0);
  for (auto& a : assigns) {
    if (a.buf < 1 || a.buf > static_cast<int>(ctx.out_types.size()))
      fail("IndexOutOfBounds", "out(" + std::to_string(a.buf) + ",_) references a missing output buffer");
    if (a.acc < 1 || a.acc > ctx.out_access_counts[static_cast<size_t>(a.buf - 1)])
      fail("IndexOutOfBounds", "out(" + std::to_string(a.buf) + "," + std::to_string(a.acc) + ") references a missing access");
    auto& flag = seen[static_cast<size_t>(a.buf - 1)][static_cast<size_t>(a.acc - 1)];
    if (flag)
      fail("IndexOutOfBounds", "out(" + std::to_string(a.buf) + "," + std::to_string(a.acc) + ") assigned twice");
    flag = 1;
    type_expr(a.expr, ctx);
    ScalarType want = ctx.out_types[static_cast<size_t>(a.buf - 1)];
    if (a.expr.type != want) {
      if (want == ScalarType::Float64 && coerce_float(a.expr)) continue;
      fail("MixedTypes", "out(" + std::to_string(a.buf) + "," + std::to_string(a.acc) + ") expression type " +
                             type_name(a.expr.type) + " does not match buffer type " + type_name(want));
    }
  }
  for (size_t b = 0; b < seen.size(); ++b)
    for (size_t a = 0; a < seen[b].size(); ++a)
      if (!seen[b][a])
        fail("IndexOutOfBounds",
             "out(" + std::to_string(b + 1) + "," + std::to_string(a + 1) + ") never assigned");
  // Canonical order: result tuple components follow (buf, acc) declaration order.
  std::sort(assigns.begin(), assigns.end(), [](const OutAssign& x, const OutAssign& y) {
    return x.buf != y.buf ? x.buf < y.buf : x.acc < y.acc;
  });
}

ScalarValue::Comp eval_expr(const ExprNode& e, const ScalarEvalEnv& env) {
  auto comp_i = [](int64_t v) { return ScalarValue::Comp{ScalarType::Int64, v, static_cast<double>(v)}; };
  auto comp_f = [](double v) { return ScalarValue::Comp{ScalarType::Float64, 0, v}; };
  switch (e.kind) {
    case ExprKind::Lit:
      return e.type == ScalarType::Float64 ? comp_f(e.fval) : comp_i(e.ival);
    case ExprKind::In: return env.in(e.buf, e.acc);
    case ExprKind::Idx: return comp_i(env.idx(e.dim));
    case ExprKind::Abs: {
      auto v = eval_expr(e.args[0], env);
      if (v.type == ScalarType::Int64) return comp_i(v.i < 0 ? -v.i : v.i);
      return comp_f(std::fabs(v.f));
    }
    case ExprKind::Cmp: {
      auto a = eval_expr(e.args[0], env);
      auto b = eval_expr(e.args[1], env);
      int64_t r;
      if (a.type == ScalarType::Int64)
        r = a.i < b.i ? -1 : (a.i > b.i ? 1 : 0);
      else
        r = a.f < b.f ? -1 : (a.f > b.f ? 1 : 0);
      return comp_i(r);
    }
    case ExprKind::Select: {
      auto c = eval_expr(e.args[0], env);
      return eval_expr(c.i != 0 ? e.args[1] : e.args[2], env);
    }
    default: {
      auto a = eval_expr(e.args[0], env);
      auto b = eval_expr(e.args[1], env);
      if (a.type == ScalarType::Int64) {
        switch (e.kind) {
          case ExprKind::Add: return comp_i(a.i + b.i);
          case ExprKind::Sub: return comp_i(a.i - b.i);
          case ExprKind::Mul: return comp_i(a.i * b.i);
          case ExprKind::Div:
            if (b.i == 0) fail("DivisionByZero", "integer division by zero in scalar function");
            return comp_i(a.i / b.i);
          case ExprKind::Min: return comp_i(a.i < b.i ? a.i : b.i);
          default: return comp_i(a.i > b.i ? a.i : b.i);
        }
      }
      switch (e.kind) {
        case ExprKind::Add: return comp_f(a.f + b.f);
        case ExprKind::Sub: return comp_f(a.f - b.f);
        case ExprKind::Mul: return comp_f(a.f * b.f);
        case ExprKind::Div: return comp_f(a.f / b.f);
        case ExprKind::Min: return comp_f(a.f < b.f ? a.f : b.f);
        default: return comp_f(a.f > b.f ? a.f : b.f);
      }
    }
  }
}

ScalarValue eval_scalar(const ScalarExpr& f, const ScalarEvalEnv& env) {
  ScalarValue v;
  v.is_tuple = f.assigns.size() > 1;
  v.comps.resize(f.assigns.size());
  for (size_t i = 0; i < f.assigns.size(); ++i) v.comps[i] = eval_expr(f.assigns[i].expr, env);
  return v;
}

} // namespace mdh
