#pragma once

// Small arithmetic expression language used for densities, parametric
// families and cost functions in JSON documents.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: pow, exp, log, sqrt, abs, min, max, sin, cos. Constant: pi.
// Expressions compile to postfix code evaluated on a fixed stack.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levyot/error.hpp"

namespace levyot {

class Expr {
public:
  enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Sqrt, Abs, Min, Max, Sin, Cos };

  Expr() : Expr(0.0) {}
  explicit Expr(double constant) {
    code_.push_back({Op::Const, 0, constant});
    depth_ = 1;
    source_ = format_number(constant);
  }

  /// Throws ValidationError naming the column of the first offending token.
  static Expr parse(std::string_view src, const std::vector<std::string>& vars) {
    Expr e;
    e.code_.clear();
    e.source_ = std::string(src);
    Parser p{src, vars, e.code_};
    p.skip_ws();
    p.expr();
    p.skip_ws();
    if (p.pos != src.size()) p.fail("unexpected trailing input");
    e.depth_ = max_depth(e.code_);
    return e;
  }

  double eval(std::span<const double> values) const {
    std::array<double, kMaxStack> st;
    std::size_t sp = 0;
    for (const Instr& in : code_) {
      switch (in.op) {
        case Op::Const: st[sp++] = in.value; break;
        case Op::Var: st[sp++] = values[in.index]; break;
        case Op::Add: --sp; st[sp - 1] += st[sp]; break;
        case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case Op::Div: --sp; st[sp - 1] /= st[sp]; break;
        case Op::Pow: --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
        case Op::Min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
        case Op::Max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
        case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case Op::Log: st[sp - 1] = std::log(st[sp - 1]); break;
        case Op::Sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
        case Op::Abs: st[sp - 1] = std::abs(st[sp - 1]); break;
        case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
      }
    }
    return st[0];
  }

  bool uses(std::size_t var) const {
    for (const Instr& in : code_)
      if (in.op == Op::Var && in.index == var) return true;
    return false;
  }
  bool is_constant() const { return code_.size() == 1 && code_[0].op == Op::Const; }
  const std::string& source() const { return source_; }

  static std::string format_number(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
  }

private:
  static constexpr std::size_t kMaxStack = 64;

  struct Instr {
    Op op;
    std::uint32_t index;
    double value;
  };

  struct Parser {
    std::string_view src;
    const std::vector<std::string>& vars;
    std::vector<Instr>& out;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ValidationError("expression '" + std::string(src) + "': " + msg + " at column " +
                            std::to_string(pos + 1));
    }
    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_ws();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    void emit(Op op) { out.push_back({op, 0, 0.0}); }

    void expr() {
      term();
      for (;;) {
        if (accept('+')) { term(); emit(Op::Add); }
        else if (accept('-')) { term(); emit(Op::Sub); }
        else break;
      }
    }
    void term() {
      unary();
      for (;;) {
        if (accept('*')) { unary(); emit(Op::Mul); }
        else if (accept('/')) { unary(); emit(Op::Div); }
        else break;
      }
    }
    void unary() {
      if (accept('-')) { unary(); emit(Op::Neg); return; }
      if (accept('+')) { unary(); return; }
      power();
    }
    void power() {
      primary();
      if (accept('^')) { unary(); emit(Op::Pow); }
    }
    void primary() {
      skip_ws();
      if (pos >= src.size()) fail("unexpected end of input");
      const char c = src[pos];
      if (c == '(') {
        ++pos;
        expr();
        expect(')');
        return;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        number();
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
          ++pos;
        const std::string name(src.substr(start, pos - start));
        skip_ws();
        if (pos < src.size() && src[pos] == '(') {
          ++pos;
          call(name, start);
          return;
        }
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (vars[i] == name) {
            out.push_back({Op::Var, static_cast<std::uint32_t>(i), 0.0});
            return;
          }
        }
        if (name == "pi") {
          out.push_back({Op::Const, 0, std::numbers::pi});
          return;
        }
        pos = start;
        fail("unknown variable '" + name + "'");
      }
      fail(std::string("unexpected character '") + c + "'");
    }
    void number() {
      const std::size_t start = pos;
      while (pos < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
        ++pos;
      if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
        std::size_t q = pos + 1;
        if (q < src.size() && (src[q] == '+' || src[q] == '-')) ++q;
        if (q < src.size() && std::isdigit(static_cast<unsigned char>(src[q]))) {
          pos = q;
          while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
        }
      }
      const std::string text(src.substr(start, pos - start));
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size()) {
        pos = start;
        fail("malformed number '" + text + "'");
      }
      out.push_back({Op::Const, 0, v});
    }
    void call(const std::string& name, std::size_t start) {
      std::size_t argc = 0;
      if (!accept(')')) {
        do {
          expr();
          ++argc;
        } while (accept(','));
        expect(')');
      }
      struct Fn { const char* name; std::size_t argc; Op op; };
      static constexpr Fn table[] = {
          {"pow", 2, Op::Pow}, {"min", 2, Op::Min}, {"max", 2, Op::Max},
          {"exp", 1, Op::Exp}, {"log", 1, Op::Log}, {"sqrt", 1, Op::Sqrt},
          {"abs", 1, Op::Abs}, {"sin", 1, Op::Sin}, {"cos", 1, Op::Cos}};
      for (const Fn& f : table) {
        if (name == f.name) {
          if (argc != f.argc) {
            pos = start;
            fail("function '" + name + "' takes " + std::to_string(f.argc) + " argument(s)");
          }
          emit(f.op);
          return;
        }
      }
      pos = start;
      fail("unknown function '" + name + "'");
    }
  };

  static std::size_t max_depth(const std::vector<Instr>& code) {
    std::size_t sp = 0, best = 0;
    for (const Instr& in : code) {
      switch (in.op) {
        case Op::Const: case Op::Var: ++sp; break;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
        case Op::Pow: case Op::Min: case Op::Max: --sp; break;
        default: break;
      }
      best = std::max(best, sp);
    }
    if (best > kMaxStack) throw ValidationError("expression too deeply nested");
    return best;
  }

  std::vector<Instr> code_;
  std::size_t depth_ = 0;
  std::string source_;
};

}  // namespace levyot
