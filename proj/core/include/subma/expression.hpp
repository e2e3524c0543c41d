#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "subma/polynomial.hpp"

namespace subma {

/// Closed-form scalar expression over a fixed variable table.
///
/// Grammar (recursive descent, no scripting):
///   expr    := term (('+'|'-') term)*
///   term    := factor (('*'|'/') factor)*
///   factor  := unary ('^' factor)?          -- '^' right-associative
///   unary   := ('-'|'+') unary | primary
///   primary := number | variable | ('exp'|'log') '(' expr ')' | '(' expr ')'
///
/// Variable names are supplied by the caller (typically x1..xn, and for
/// Hamiltonians additionally r and q1..qm).
class Expression {
public:
  Expression() = default;

  static Expression parse(const std::string& text,
                          std::span<const std::string> variables);

  bool empty() const { return root_ == nullptr; }
  const std::string& text() const { return text_; }

  /// Evaluate with one value per variable in table order.
  double eval(std::span<const double> values) const;

  /// True when the expression uses no variables at all.
  bool is_constant() const;

  /// Exact conversion to a polynomial in the first `nvars` variables.
  /// Throws ValidationError when the expression is not polynomial
  /// (exp/log of a non-constant, division by a non-constant, fractional
  /// or negative powers).
  Polynomial to_polynomial(int nvars) const;

  struct Node;

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  int nvars_ = 0;
};

}  // namespace subma
