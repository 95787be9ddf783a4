#include "hypwr/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>

namespace hypwr {

namespace {

enum class Kind { Const, VarT, VarXd, VarY, Neg, Add, Sub, Mul, Div, Pow, Call };

using Fn1 = Real (*)(Real);

Fn1 lookup_fn(const std::string& name) {
  if (name == "sin") return [](Real x) { return std::sin(x); };
  if (name == "cos") return [](Real x) { return std::cos(x); };
  if (name == "tan") return [](Real x) { return std::tan(x); };
  if (name == "exp") return [](Real x) { return std::exp(x); };
  if (name == "log") return [](Real x) { return std::log(x); };
  if (name == "sqrt") return [](Real x) { return std::sqrt(x); };
  if (name == "abs") return [](Real x) { return std::abs(x); };
  if (name == "sinh") return [](Real x) { return std::sinh(x); };
  if (name == "cosh") return [](Real x) { return std::cosh(x); };
  if (name == "tanh") return [](Real x) { return std::tanh(x); };
  if (name == "atan") return [](Real x) { return std::atan(x); };
  return nullptr;
}

}  // namespace

struct ScalarExpr::Node {
  Kind kind = Kind::Const;
  Real value = 0.0;            // Const
  int y_index = 0;             // VarY (0-based)
  Fn1 fn = nullptr;            // Call
  std::shared_ptr<const Node> a, b;

  Real eval(Real t, const Vec& y, Real xd) const {
    switch (kind) {
      case Kind::Const: return value;
      case Kind::VarT: return t;
      case Kind::VarXd: return xd;
      case Kind::VarY:
        if (y_index >= y.size())
          throw ParseError("system_model", "expression",
                           "variable y" + std::to_string(y_index + 1) +
                               " out of range for this dimension");
        return y[y_index];
      case Kind::Neg: return -a->eval(t, y, xd);
      case Kind::Add: return a->eval(t, y, xd) + b->eval(t, y, xd);
      case Kind::Sub: return a->eval(t, y, xd) - b->eval(t, y, xd);
      case Kind::Mul: return a->eval(t, y, xd) * b->eval(t, y, xd);
      case Kind::Div: return a->eval(t, y, xd) / b->eval(t, y, xd);
      case Kind::Pow: return std::pow(a->eval(t, y, xd), b->eval(t, y, xd));
      case Kind::Call: return fn(a->eval(t, y, xd));
    }
    return 0.0;
  }

  bool constant() const {
    switch (kind) {
      case Kind::Const: return true;
      case Kind::VarT:
      case Kind::VarXd:
      case Kind::VarY: return false;
      case Kind::Neg:
      case Kind::Call: return a->constant();
      default: return a->constant() && b->constant();
    }
  }
};

namespace {

using NodePtr = std::shared_ptr<const ScalarExpr::Node>;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<ScalarExpr::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_const(Real v) {
  auto n = std::make_shared<ScalarExpr::Node>();
  n->kind = Kind::Const;
  n->value = v;
  return n;
}

class Parser {
 public:
  Parser(const std::string& s, const std::map<std::string, Real>& params)
      : s_(s), params_(params) {}

  NodePtr run() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return e;
  }

 private:
  const std::string& s_;
  const std::map<std::string, Real>& params_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("system_model", "expression",
                     "'" + s_ + "' at position " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Kind::Add, lhs, term());
      else if (accept('-')) lhs = make(Kind::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make(Kind::Mul, lhs, factor());
      else if (accept('/')) lhs = make(Kind::Div, lhs, factor());
      else return lhs;
    }
  }

  NodePtr factor() {
    NodePtr base = unary();
    if (accept('^')) return make(Kind::Pow, base, factor());
    return base;
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    fail("unexpected character");
  }

  NodePtr number() {
    std::size_t end = 0;
    Real v = 0;
    try {
      v = std::stod(s_.substr(pos_), &end);
    } catch (const std::exception&) {
      fail("bad numeric literal");
    }
    pos_ += end;
    return make_const(v);
  }

  NodePtr ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);

    if (accept('(')) {
      Fn1 fn = lookup_fn(name);
      if (!fn) fail("unknown function '" + name + "'");
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')' after function argument");
      auto n = make(Kind::Call, arg);
      const_cast<ScalarExpr::Node*>(n.get())->fn = fn;
      return n;
    }

    if (name == "t") return make(Kind::VarT);
    if (name == "xd") return make(Kind::VarXd);
    if (name == "pi") return make_const(M_PI);
    if (name.size() >= 2 && name[0] == 'y') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
      if (digits) {
        auto n = make(Kind::VarY);
        const_cast<ScalarExpr::Node*>(n.get())->y_index = std::stoi(name.substr(1)) - 1;
        if (n->y_index < 0) fail("y indices start at 1");
        return n;
      }
    }
    auto it = params_.find(name);
    if (it != params_.end()) return make_const(it->second);
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

ScalarExpr ScalarExpr::parse(const std::string& text,
                             const std::map<std::string, Real>& params) {
  ScalarExpr e;
  e.root_ = Parser(text, params).run();
  e.text_ = text;
  return e;
}

ScalarExpr ScalarExpr::constant(Real v) {
  ScalarExpr e;
  e.root_ = make_const(v);
  e.text_ = std::to_string(v);
  return e;
}

Real ScalarExpr::eval(Real t, const Vec& y, Real xd) const {
  return root_->eval(t, y, xd);
}

bool ScalarExpr::is_constant() const { return root_ && root_->constant(); }

}  // namespace hypwr
