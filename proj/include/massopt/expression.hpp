#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace massopt {

/// Parsed arithmetic expression over a small set of named variables.
///
/// Grammar (lowest precedence first):
///
///     expr    := sum [ "if" NAME ">=" sum "else" expr ]
///     sum     := product (("+" | "-") product)*
///     product := unary (("*" | "/") unary)*
///     unary   := ("+" | "-") unary | power
///     power   := primary ["^" unary]
///     primary := NUMBER | "inf" | NAME | "(" expr ")"
///
/// Evaluation runs in the extended reals. A division by zero produces +inf
/// only when the designated singular variable equals zero and the numerator
/// is positive (the 1/t term of a cost at t = 0); every other division by
/// zero, every inf - inf and every 0 * inf is an evaluation error.
class Expression {
public:
  /// Throws Error(parse_error) with a column-annotated message.
  static Expression parse(const std::string& source, std::vector<std::string> variables);

  /// `values` are bound to the variable names in declaration order.
  double evaluate(std::span<const double> values) const;
  double evaluate(double value) const { return evaluate(std::span<const double>(&value, 1)); }

  const std::string& source() const { return source_; }
  const std::vector<std::string>& variables() const { return variables_; }

  struct Node;

private:
  std::string source_;
  std::vector<std::string> variables_;
  std::shared_ptr<const Node> root_;
};

} // namespace massopt
