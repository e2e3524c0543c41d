#include "subma/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "subma/errors.hpp"

namespace subma {

enum class Op { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kExp, kLog };

struct Expression::Node {
  Op op = Op::kConst;
  double value = 0.0;  // kConst
  int var = -1;        // kVar
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
public:
  Parser(const std::string& text, std::span<const std::string> vars)
      : text_(text), vars_(vars) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      fail("unexpected trailing input");
    return e;
  }

private:
  const std::string& text_;
  std::span<const std::string> vars_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression error at column " + std::to_string(pos_ + 1) +
                          " of \"" + text_ + "\": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  static NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (true) {
      if (accept('+')) lhs = make(Op::kAdd, lhs, parse_term());
      else if (accept('-')) lhs = make(Op::kSub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    while (true) {
      if (accept('*')) lhs = make(Op::kMul, lhs, parse_factor());
      else if (accept('/')) lhs = make(Op::kDiv, lhs, parse_factor());
      else return lhs;
    }
  }

  NodePtr parse_factor() {
    NodePtr base = parse_unary();
    if (accept('^')) return make(Op::kPow, base, parse_factor());
    return base;
  }

  NodePtr parse_unary() {
    if (accept('-')) return make(Op::kNeg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_primary();
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    fail("unexpected character");
  }

  NodePtr parse_number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::kConst;
    n->value = v;
    return n;
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (name == "exp" || name == "log") {
      expect('(');
      NodePtr arg = parse_expr();
      expect(')');
      return make(name == "exp" ? Op::kExp : Op::kLog, arg);
    }
    if (name == "pi") {
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::kConst;
      n->value = 3.14159265358979323846;
      return n;
    }
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      if (vars_[k] == name) {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::kVar;
        n->var = static_cast<int>(k);
        return n;
      }
    }
    pos_ = start;
    fail("unknown identifier \"" + name + "\"");
  }
};

double eval_node(const Expression::Node& n, std::span<const double> v) {
  switch (n.op) {
    case Op::kConst: return n.value;
    case Op::kVar: return v[static_cast<std::size_t>(n.var)];
    case Op::kAdd: return eval_node(*n.a, v) + eval_node(*n.b, v);
    case Op::kSub: return eval_node(*n.a, v) - eval_node(*n.b, v);
    case Op::kMul: return eval_node(*n.a, v) * eval_node(*n.b, v);
    case Op::kDiv: return eval_node(*n.a, v) / eval_node(*n.b, v);
    case Op::kPow: return std::pow(eval_node(*n.a, v), eval_node(*n.b, v));
    case Op::kNeg: return -eval_node(*n.a, v);
    case Op::kExp: return std::exp(eval_node(*n.a, v));
    case Op::kLog: return std::log(eval_node(*n.a, v));
  }
  return 0.0;
}

bool node_constant(const Expression::Node& n) {
  switch (n.op) {
    case Op::kConst: return true;
    case Op::kVar: return false;
    case Op::kNeg:
    case Op::kExp:
    case Op::kLog: return node_constant(*n.a);
    default: return node_constant(*n.a) && node_constant(*n.b);
  }
}

Polynomial node_to_poly(const Expression::Node& n, int nvars) {
  if (node_constant(n))
    return Polynomial::constant(nvars, eval_node(n, {}));
  switch (n.op) {
    case Op::kVar:
      if (n.var >= nvars)
        throw ValidationError("variable index exceeds polynomial arity");
      return Polynomial::variable(nvars, n.var);
    case Op::kAdd: return node_to_poly(*n.a, nvars) + node_to_poly(*n.b, nvars);
    case Op::kSub: return node_to_poly(*n.a, nvars) - node_to_poly(*n.b, nvars);
    case Op::kMul: return node_to_poly(*n.a, nvars) * node_to_poly(*n.b, nvars);
    case Op::kNeg: return -node_to_poly(*n.a, nvars);
    case Op::kDiv: {
      if (!node_constant(*n.b))
        throw ValidationError("polynomial division only by constants");
      const double d = eval_node(*n.b, {});
      if (d == 0.0) throw ValidationError("division by zero");
      return node_to_poly(*n.a, nvars) * (1.0 / d);
    }
    case Op::kPow: {
      if (!node_constant(*n.b))
        throw ValidationError("polynomial exponent must be constant");
      const double e = eval_node(*n.b, {});
      if (e < 0.0 || e != std::floor(e))
        throw ValidationError("polynomial exponent must be a nonnegative integer");
      Polynomial base = node_to_poly(*n.a, nvars);
      Polynomial out = Polynomial::constant(nvars, 1.0);
      for (int k = 0; k < static_cast<int>(e); ++k) out = out * base;
      return out;
    }
    case Op::kExp:
    case Op::kLog:
      throw ValidationError("exp/log of a non-constant is not polynomial");
    case Op::kConst: break;  // handled above
  }
  return Polynomial(nvars);
}

}  // namespace

Expression Expression::parse(const std::string& text,
                             std::span<const std::string> variables) {
  Parser p(text, variables);
  Expression e;
  e.root_ = p.run();
  e.text_ = text;
  e.nvars_ = static_cast<int>(variables.size());
  return e;
}

double Expression::eval(std::span<const double> values) const {
  if (!root_) throw Error("evaluating empty expression");
  return eval_node(*root_, values);
}

bool Expression::is_constant() const {
  return root_ && node_constant(*root_);
}

Polynomial Expression::to_polynomial(int nvars) const {
  if (!root_) throw Error("converting empty expression");
  return node_to_poly(*root_, nvars);
}

}  // namespace subma
