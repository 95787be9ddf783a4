#pragma once

#include "hypwr/types.hpp"

#include <map>
#include <memory>
#include <string>

namespace hypwr {

// Scalar expression in the variables t, xd, y1..y9 plus named parameters.
// Grammar: + - * / ^ (right assoc), unary minus, parentheses, function calls.
// Parsed once into a small AST; evaluation is allocation-free.
class ScalarExpr {
 public:
  ScalarExpr() = default;

  static ScalarExpr parse(const std::string& text,
                          const std::map<std::string, Real>& params);
  static ScalarExpr constant(Real v);

  // vars: t, y (length d-1), xd
  Real eval(Real t, const Vec& y, Real xd) const;
  bool is_constant() const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace hypwr
