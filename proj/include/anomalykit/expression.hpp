#pragma once

#include <string>
#include <vector>

namespace anomalykit {

/// Scalar expression in the spatial variables x1, x2.
///
/// Grammar: + - * / ^, unary minus, parentheses, sin cos exp, numeric
/// literals, pi, x1, x2. Compiled once to a postfix program.
class Expression {
 public:
  static constexpr int kMaxDepth = 64;  ///< evaluation stack size

  Expression() = default;
  static Expression constant(double value);
  /// Throws ConfigError with the offending position on malformed input.
  static Expression parse(const std::string& text);

  double operator()(double x1, double x2) const;

  bool is_constant() const { return constant_; }
  /// Only meaningful when is_constant().
  double constant_value() const { return value_; }
  const std::string& text() const { return text_; }

 private:
  enum class Op : unsigned char { kPush, kX1, kX2, kAdd, kSub, kMul, kDiv, kPow, kNeg, kSin, kCos, kExp };
  struct Instr {
    Op op;
    double value;
  };
  friend class ExpressionParser;

  std::vector<Instr> program_;
  std::string text_ = "0";
  bool constant_ = true;
  double value_ = 0.0;
};

}  // namespace anomalykit
