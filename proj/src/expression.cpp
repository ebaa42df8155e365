#include "massopt/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "massopt/error.hpp"

namespace massopt {

struct Expression::Node {
  enum class Kind { number, variable, negate, add, sub, mul, div, pow, guarded } kind;
  double number = 0.0;
  std::size_t variable = 0;
  std::shared_ptr<const Node> a, b, c, d;  // guarded: a if var(variable) >= b else c
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Tok { number, name, plus, minus, star, slash, caret, lparen, rparen, geq, end };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t column = 0;  // 1-based
};

[[noreturn]] void parse_fail(const std::string& src, std::size_t column, const std::string& msg) {
  std::ostringstream os;
  os << msg << " at column " << column << " in \"" << src << "\"";
  throw Error(ErrorCode::parse_error, os.str());
}

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char ch = src[i];
    const std::size_t col = i + 1;
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      const char* begin = src.c_str() + i;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) parse_fail(src, col, "malformed number");
      out.push_back({Tok::number, std::string(begin, static_cast<std::size_t>(end - begin)), v, col});
      i += static_cast<std::size_t>(end - begin);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::name, src.substr(i, j - i), 0.0, col});
      i = j;
      continue;
    }
    if (ch == '>' && i + 1 < src.size() && src[i + 1] == '=') {
      out.push_back({Tok::geq, ">=", 0.0, col});
      i += 2;
      continue;
    }
    Tok k;
    switch (ch) {
      case '+': k = Tok::plus; break;
      case '-': k = Tok::minus; break;
      case '*': k = Tok::star; break;
      case '/': k = Tok::slash; break;
      case '^': k = Tok::caret; break;
      case '(': k = Tok::lparen; break;
      case ')': k = Tok::rparen; break;
      default: parse_fail(src, col, std::string("unexpected character '") + ch + "'");
    }
    out.push_back({k, std::string(1, ch), 0.0, col});
    ++i;
  }
  out.push_back({Tok::end, "", 0.0, src.size() + 1});
  return out;
}

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
public:
  Parser(const std::string& src, const std::vector<std::string>& vars)
      : src_(src), vars_(vars), toks_(tokenize(src)) {}

  NodePtr parse() {
    NodePtr root = expr();
    if (peek().kind != Tok::end) parse_fail(src_, peek().column, "unexpected token '" + peek().text + "'");
    return root;
  }

private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }
  bool is_keyword(const char* kw) const { return peek().kind == Tok::name && peek().text == kw; }

  NodePtr expr() {
    NodePtr value = sum();
    if (!is_keyword("if")) return value;
    take();
    const Token& var = take();
    if (var.kind != Tok::name) parse_fail(src_, var.column, "expected a variable after 'if'");
    const std::size_t index = lookup(var);
    if (peek().kind != Tok::geq) parse_fail(src_, peek().column, "expected '>=' in guard");
    take();
    NodePtr threshold = sum();
    if (!is_keyword("else")) parse_fail(src_, peek().column, "expected 'else' after guard");
    take();
    NodePtr otherwise = expr();
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::guarded;
    n->variable = index;
    n->a = value;
    n->b = threshold;
    n->c = otherwise;
    return n;
  }

  NodePtr sum() {
    NodePtr lhs = product();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Kind k = take().kind == Tok::plus ? Kind::add : Kind::sub;
      lhs = make(k, lhs, product());
    }
    return lhs;
  }

  NodePtr product() {
    NodePtr lhs = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const Kind k = take().kind == Tok::star ? Kind::mul : Kind::div;
      lhs = make(k, lhs, unary());
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek().kind == Tok::minus) {
      take();
      return make(Kind::negate, unary());
    }
    if (peek().kind == Tok::plus) {
      take();
      return unary();
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek().kind == Tok::caret) {
      take();
      return make(Kind::pow, base, unary());
    }
    return base;
  }

  NodePtr primary() {
    const Token& t = take();
    switch (t.kind) {
      case Tok::number: {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::number;
        n->number = t.number;
        return n;
      }
      case Tok::name: {
        auto n = std::make_shared<Expression::Node>();
        if (t.text == "inf") {
          n->kind = Kind::number;
          n->number = kInf;
          return n;
        }
        n->kind = Kind::variable;
        n->variable = lookup(t);
        return n;
      }
      case Tok::lparen: {
        NodePtr inner = expr();
        if (peek().kind != Tok::rparen) parse_fail(src_, peek().column, "expected ')'");
        take();
        return inner;
      }
      case Tok::end: parse_fail(src_, t.column, "unexpected end of expression");
      default: parse_fail(src_, t.column, "unexpected token '" + t.text + "'");
    }
  }

  std::size_t lookup(const Token& t) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == t.text) return i;
    parse_fail(src_, t.column, "unknown name '" + t.text + "'");
  }

  const std::string& src_;
  const std::vector<std::string>& vars_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

[[noreturn]] void eval_fail(const std::string& src, const std::string& msg) {
  throw Error(ErrorCode::evaluation_error, msg + " in \"" + src + "\"");
}

double eval(const Expression::Node& n, std::span<const double> vals, const std::string& src) {
  auto checked = [&](double v, const char* what) {
    if (std::isnan(v)) eval_fail(src, what);
    return v;
  };
  switch (n.kind) {
    case Kind::number: return n.number;
    case Kind::variable: return vals[n.variable];
    case Kind::negate: return -eval(*n.a, vals, src);
    case Kind::add: return checked(eval(*n.a, vals, src) + eval(*n.b, vals, src), "inf - inf");
    case Kind::sub: return checked(eval(*n.a, vals, src) - eval(*n.b, vals, src), "inf - inf");
    case Kind::mul: return checked(eval(*n.a, vals, src) * eval(*n.b, vals, src), "0 * inf");
    case Kind::div: {
      const double num = eval(*n.a, vals, src);
      const double den = eval(*n.b, vals, src);
      if (den == 0.0) {
        if (!vals.empty() && vals[0] == 0.0 && num > 0.0) return kInf;
        eval_fail(src, "division by zero");
      }
      return checked(num / den, "inf / inf");
    }
    case Kind::pow: return checked(std::pow(eval(*n.a, vals, src), eval(*n.b, vals, src)), "invalid power");
    case Kind::guarded:
      return vals[n.variable] >= eval(*n.b, vals, src) ? eval(*n.a, vals, src) : eval(*n.c, vals, src);
  }
  return 0.0;
}

} // namespace

Expression Expression::parse(const std::string& source, std::vector<std::string> variables) {
  Expression e;
  e.source_ = source;
  e.variables_ = std::move(variables);
  e.root_ = Parser(e.source_, e.variables_).parse();
  return e;
}

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() != variables_.size())
    throw Error(ErrorCode::evaluation_error, "wrong number of variable values for \"" + source_ + "\"");
  return eval(*root_, values, source_);
}

} // namespace massopt
