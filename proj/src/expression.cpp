#include "anomalykit/expression.hpp"

#include "anomalykit/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace anomalykit {

class ExpressionParser {
 public:
  explicit ExpressionParser(const std::string& s) : src_(s) {}

  Expression run() {
    Expression e;
    e.text_ = src_;
    program_ = &e.program_;
    parse_sum();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    bool uses_x = false;
    int depth = 0;
    for (const auto& ins : e.program_) {
      uses_x |= (ins.op == Op::kX1 || ins.op == Op::kX2);
      if (ins.op == Op::kPush || ins.op == Op::kX1 || ins.op == Op::kX2) {
        if (++depth > Expression::kMaxDepth) fail("expression nested too deeply");
      } else if (ins.op == Op::kAdd || ins.op == Op::kSub || ins.op == Op::kMul || ins.op == Op::kDiv ||
                 ins.op == Op::kPow) {
        --depth;
      }
    }
    e.constant_ = !uses_x;
    if (e.constant_) {
      e.constant_ = false;
      e.value_ = e(0.0, 0.0);
      e.constant_ = true;
    }
    return e;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + src_ + "': " + what + " at position " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void emit(Op op, double v = 0.0) { program_->push_back({op, v}); }

  void parse_sum() {
    parse_product();
    for (;;) {
      if (accept('+')) {
        parse_product();
        emit(Op::kAdd);
      } else if (accept('-')) {
        parse_product();
        emit(Op::kSub);
      } else {
        return;
      }
    }
  }

  void parse_product() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::kMul);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::kDiv);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::kNeg);
      return;
    }
    if (accept('+')) {
      parse_unary();
      return;
    }
    parse_power();
  }

  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_unary();
      emit(Op::kPow);
    }
  }

  void parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_sum();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const char* first = src_.data() + pos_;
      const auto [ptr, ec] = std::from_chars(first, src_.data() + src_.size(), v);
      if (ec != std::errc() || ptr == first) fail("bad number");
      pos_ += static_cast<std::size_t>(ptr - first);
      emit(Op::kPush, v);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < src_.size() && std::isalnum(static_cast<unsigned char>(src_[end]))) ++end;
      const std::string word = src_.substr(pos_, end - pos_);
      pos_ = end;
      if (word == "x1") return emit(Op::kX1);
      if (word == "x2") return emit(Op::kX2);
      if (word == "pi") return emit(Op::kPush, std::numbers::pi);
      Op fn;
      if (word == "sin") {
        fn = Op::kSin;
      } else if (word == "cos") {
        fn = Op::kCos;
      } else if (word == "exp") {
        fn = Op::kExp;
      } else {
        fail("unknown identifier '" + word + "'");
      }
      if (!accept('(')) fail("expected '(' after " + word);
      parse_sum();
      if (!accept(')')) fail("expected ')'");
      emit(fn);
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  std::vector<Expression::Instr>* program_ = nullptr;
};

Expression Expression::constant(double value) {
  Expression e;
  e.program_.push_back({Op::kPush, value});
  e.constant_ = true;
  e.value_ = value;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  e.text_.assign(buf, res.ptr);
  return e;
}

Expression Expression::parse(const std::string& text) { return ExpressionParser(text).run(); }

double Expression::operator()(double x1, double x2) const {
  if (constant_) return value_;
  double stack[kMaxDepth];
  int top = 0;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::kPush: stack[top++] = ins.value; break;
      case Op::kX1: stack[top++] = x1; break;
      case Op::kX2: stack[top++] = x2; break;
      case Op::kAdd: --top; stack[top - 1] += stack[top]; break;
      case Op::kSub: --top; stack[top - 1] -= stack[top]; break;
      case Op::kMul: --top; stack[top - 1] *= stack[top]; break;
      case Op::kDiv: --top; stack[top - 1] /= stack[top]; break;
      case Op::kPow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
      case Op::kNeg: stack[top - 1] = -stack[top - 1]; break;
      case Op::kSin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::kCos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::kExp: stack[top - 1] = std::exp(stack[top - 1]); break;
    }
  }
  return top == 1 ? stack[0] : 0.0;
}

}  // namespace anomalykit
