#include "jetplasma/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "jetplasma/errors.hpp"

namespace jetplasma::expr {

namespace {

struct FunctionInfo {
  const char* name;
  Function function;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", Function::Sin, 1},   {"cos", Function::Cos, 1},   {"exp", Function::Exp, 1},
    {"log", Function::Log, 1},   {"sqrt", Function::Sqrt, 1}, {"tanh", Function::Tanh, 1},
    {"pow", Function::Pow, 2},
};

const FunctionInfo* find_function(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (name == f.name) return &f;
  }
  return nullptr;
}

const char* function_name(Function f) {
  for (const auto& info : kFunctions) {
    if (info.function == f) return info.name;
  }
  return "?";
}

NodePtr make(Op op, std::vector<NodePtr> args) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Number: return "number";
    case Tok::Ident: return "identifier";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::End: return "end of input";
  }
  return "?";
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) { advance(); }

  NodePtr parse_all() {
    NodePtr e = parse_expr();
    if (tok_.kind != Tok::End) fail({Tok::Plus, Tok::Minus, Tok::Star, Tok::Slash, Tok::Caret, Tok::End});
    return e;
  }

 private:
  [[noreturn]] void fail(std::initializer_list<Tok> expected) {
    std::string exp;
    for (Tok t : expected) {
      if (!exp.empty()) exp += ", ";
      exp += describe(t);
    }
    throw ParseError("syntax error at offset " + std::to_string(tok_.offset) + ": unexpected " +
                         std::string(describe(tok_.kind)) + ", expected one of {" + exp + "}",
                     tok_.offset, exp);
  }

  void advance() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) {
      ++pos_;
    }
    tok_ = Token{Tok::End, pos_, {}};
    if (pos_ >= src_.size()) return;
    const char c = src_[pos_];
    const std::size_t start = pos_;
    auto single = [&](Tok k) {
      tok_ = Token{k, start, src_.substr(start, 1)};
      ++pos_;
    };
    switch (c) {
      case '+': return single(Tok::Plus);
      case '-': return single(Tok::Minus);
      case '*': return single(Tok::Star);
      case '/': return single(Tok::Slash);
      case '^': return single(Tok::Caret);
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case ',': return single(Tok::Comma);
      default: break;
    }
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      std::size_t p = pos_;
      while (p < src_.size() && is_digit(src_[p])) ++p;
      if (p < src_.size() && src_[p] == '.') {
        ++p;
        while (p < src_.size() && is_digit(src_[p])) ++p;
      }
      if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
        std::size_t q = p + 1;
        if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
        if (q < src_.size() && is_digit(src_[q])) {
          while (q < src_.size() && is_digit(src_[q])) ++q;
          p = q;
        } else {
          throw ParseError("malformed exponent in numeric literal at offset " + std::to_string(p), p, "digit");
        }
      }
      const std::string_view text = src_.substr(start, p - start);
      double v = 0.0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec == std::errc::result_out_of_range || !std::isfinite(v)) {
        throw ParseError("numeric literal '" + std::string(text) + "' out of range at offset " + std::to_string(start),
                         start, "finite number");
      }
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError("malformed numeric literal at offset " + std::to_string(start), start, "number");
      }
      tok_ = Token{Tok::Number, start, text, v};
      pos_ = p;
      return;
    }
    if (is_alpha(c)) {
      std::size_t p = pos_ + 1;
      while (p < src_.size() && (is_alpha(src_[p]) || is_digit(src_[p]) || src_[p] == '_')) ++p;
      tok_ = Token{Tok::Ident, start, src_.substr(start, p - start)};
      pos_ = p;
      return;
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(start), start,
                     "number, identifier, operator or parenthesis");
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const Op op = tok_.kind == Tok::Plus ? Op::Add : Op::Subtract;
      advance();
      lhs = make(op, {lhs, parse_term()});
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const Op op = tok_.kind == Tok::Star ? Op::Multiply : Op::Divide;
      advance();
      lhs = make(op, {lhs, parse_unary()});
    }
    return lhs;
  }

  NodePtr parse_unary() {
    if (tok_.kind == Tok::Minus) {
      advance();
      return make(Op::Negate, {parse_unary()});
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (tok_.kind == Tok::Caret) {
      advance();
      return make(Op::Power, {base, parse_unary()});
    }
    return base;
  }

  NodePtr parse_atom() {
    if (tok_.kind == Tok::Number) {
      auto n = std::make_shared<Node>();
      n->op = Op::Number;
      n->number = tok_.number;
      advance();
      return n;
    }
    if (tok_.kind == Tok::Ident) {
      const Token ident = tok_;
      advance();
      if (tok_.kind != Tok::LParen) {
        auto n = std::make_shared<Node>();
        n->op = Op::Variable;
        n->name = std::string(ident.text);
        return n;
      }
      const FunctionInfo* info = find_function(ident.text);
      if (!info) {
        throw ParseError("unknown function '" + std::string(ident.text) + "' at offset " + std::to_string(ident.offset),
                         ident.offset, "sin, cos, exp, log, sqrt, tanh, pow");
      }
      advance();
      std::vector<NodePtr> args;
      args.push_back(parse_expr());
      while (tok_.kind == Tok::Comma) {
        advance();
        args.push_back(parse_expr());
      }
      if (tok_.kind != Tok::RParen) fail({Tok::Comma, Tok::RParen});
      if (static_cast<int>(args.size()) != info->arity) {
        throw ParseError("function '" + std::string(info->name) + "' takes " + std::to_string(info->arity) +
                             " argument(s), got " + std::to_string(args.size()),
                         ident.offset, std::to_string(info->arity) + " argument(s)");
      }
      advance();
      auto n = std::make_shared<Node>();
      n->op = Op::Call;
      n->name = info->name;
      n->function = info->function;
      n->args = std::move(args);
      return n;
    }
    if (tok_.kind == Tok::LParen) {
      advance();
      NodePtr e = parse_expr();
      if (tok_.kind != Tok::RParen) fail({Tok::Plus, Tok::Minus, Tok::Star, Tok::Slash, Tok::Caret, Tok::RParen});
      advance();
      return e;
    }
    fail({Tok::Number, Tok::Ident, Tok::LParen, Tok::Minus});
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_{Tok::End, 0, {}};
};

// Binding strength used by the printer: 1 additive, 2 multiplicative,
// 3 unary minus, 4 power, 5 atom.
int level(const Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Subtract: return 1;
    case Op::Multiply:
    case Op::Divide: return 2;
    case Op::Negate: return 3;
    case Op::Power: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print(const Node& n, std::string& out);

void print_at(const Node& n, int min_level, std::string& out) {
  if (level(n) < min_level) {
    out += '(';
    print(n, out);
    out += ')';
  } else {
    print(n, out);
  }
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::Number: out += format_number(n.number); return;
    case Op::Variable: out += n.name; return;
    case Op::Negate:
      out += '-';
      print_at(*n.args[0], 3, out);
      return;
    case Op::Add:
    case Op::Subtract:
      print_at(*n.args[0], 1, out);
      out += n.op == Op::Add ? " + " : " - ";
      print_at(*n.args[1], 2, out);
      return;
    case Op::Multiply:
    case Op::Divide:
      print_at(*n.args[0], 2, out);
      out += n.op == Op::Multiply ? "*" : "/";
      print_at(*n.args[1], 3, out);
      return;
    case Op::Power:
      print_at(*n.args[0], 5, out);
      out += '^';
      print_at(*n.args[1], 3, out);
      return;
    case Op::Call:
      out += function_name(n.function);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print(*n.args[i], out);
      }
      out += ')';
      return;
  }
}

void collect(const Node& n, std::set<std::string>& names) {
  if (n.op == Op::Variable) names.insert(n.name);
  for (const auto& a : n.args) collect(*a, names);
}

NodePtr rename_node(const NodePtr& n, const std::map<std::string, std::string>& mapping) {
  if (n->op == Op::Variable) {
    auto it = mapping.find(n->name);
    if (it == mapping.end()) return n;
    auto c = std::make_shared<Node>(*n);
    c->name = it->second;
    return c;
  }
  if (n->args.empty()) return n;
  auto c = std::make_shared<Node>(*n);
  for (auto& a : c->args) a = rename_node(a, mapping);
  return c;
}

// Literal integer exponent (k or -k) usable for exact repeated multiplication.
bool literal_int_exponent(const Node& e, int& k) {
  const Node* n = &e;
  int sign = 1;
  if (n->op == Op::Negate && n->args[0]->op == Op::Number) {
    sign = -1;
    n = n->args[0].get();
  }
  if (n->op != Op::Number) return false;
  const double v = n->number;
  if (v != std::floor(v) || std::abs(v) > 1024.0) return false;
  k = sign * static_cast<int>(v);
  return true;
}

bool is_variable_free(const Node& n) {
  if (n.op == Op::Variable) return false;
  for (const auto& a : n.args) {
    if (!is_variable_free(*a)) return false;
  }
  return true;
}

void compile(const NodePtr& n, const std::map<std::string, int>& index,
             std::vector<CompiledExpression::Instruction>& code) {
  CompiledExpression::Instruction ins{n->op, n->function, n->number, -1, 0, false, n.get()};
  switch (n->op) {
    case Op::Number: break;
    case Op::Variable: {
      auto it = index.find(n->name);
      if (it == index.end()) throw UnboundVariableError(n->name);
      ins.variable = it->second;
      break;
    }
    case Op::Power: {
      int k = 0;
      if (literal_int_exponent(*n->args[1], k)) {
        compile(n->args[0], index, code);
        ins.has_int_exponent = true;
        ins.int_exponent = k;
        code.push_back(ins);
        return;
      }
      for (const auto& a : n->args) compile(a, index, code);
      break;
    }
    default:
      for (const auto& a : n->args) compile(a, index, code);
      break;
  }
  code.push_back(ins);
}

template <class S>
S ipow(const S& base, int k) {
  unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
  S result(1.0);
  S b = base;
  bool first = true;
  while (e) {
    if (e & 1u) {
      result = first ? b : result * b;
      first = false;
    }
    e >>= 1u;
    if (e) b = b * b;
  }
  return result;
}

std::string subexpr(const Node* n) {
  std::string s;
  print(*n, s);
  return s;
}

template <class S>
S real_power(const S& a, const S& b, const Node* node) {
  using std::pow;
  if (!(value_of(a) > 0.0)) {
    throw DomainError("non-integer power of non-positive base " + format_number(value_of(a)), subexpr(node));
  }
  return pow(a, b);
}

template <class S>
S apply_function(Function f, const S& x, const Node* node) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  using std::tanh;
  const double v = value_of(x);
  switch (f) {
    case Function::Sin: return sin(x);
    case Function::Cos: return cos(x);
    case Function::Exp: return exp(x);
    case Function::Tanh: return tanh(x);
    case Function::Log:
      if (!(v > 0.0)) throw DomainError("log of non-positive value " + format_number(v), subexpr(node));
      return log(x);
    case Function::Sqrt:
      if (v < 0.0 || std::isnan(v)) throw DomainError("sqrt of negative value " + format_number(v), subexpr(node));
      if constexpr (!std::is_same_v<S, double>) {
        if (v == 0.0 && x.order() > 0 && !x.is_constant()) {
          throw DomainError("sqrt is not differentiable at 0", subexpr(node));
        }
      }
      return sqrt(x);
    case Function::Pow: break;
  }
  throw EvalError("internal: bad unary function");
}

}  // namespace

Expression::Expression() : root_(make(Op::Number, {})) {}

Expression Expression::parse(std::string_view source) { return Expression(Parser(source).parse_all()); }

Expression Expression::number(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Number;
  n->number = v;
  return Expression(n);
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->name = std::move(name);
  return Expression(n);
}

std::string Expression::to_string() const {
  std::string s;
  print(*root_, s);
  return s;
}

std::vector<std::string> Expression::variables() const {
  std::set<std::string> names;
  collect(*root_, names);
  return {names.begin(), names.end()};
}

bool Expression::references(std::string_view name) const {
  const auto vars = variables();
  return std::find(vars.begin(), vars.end(), name) != vars.end();
}

Expression Expression::renamed(const std::map<std::string, std::string>& mapping) const {
  return Expression(rename_node(root_, mapping));
}

double Expression::evaluate(const std::map<std::string, double>& binding) const {
  std::vector<std::string> names;
  std::vector<double> args;
  for (const auto& [k, v] : binding) {
    names.push_back(k);
    args.push_back(v);
  }
  return CompiledExpression(*this, names).evaluate(std::span<const double>(args));
}

DiffScalar Expression::evaluate(const std::map<std::string, double>& binding, std::span<const std::string> seeds,
                                int order) const {
  if (order < 0 || order > kMaxDerivativeOrder) {
    throw EvalError("derivative order " + std::to_string(order) + " outside [0, 3]");
  }
  std::vector<std::string> names;
  std::vector<DiffScalar> args;
  const int nseeds = static_cast<int>(seeds.size());
  for (int i = 0; i < nseeds; ++i) {
    const auto& s = seeds[static_cast<std::size_t>(i)];
    auto it = binding.find(s);
    if (it == binding.end()) throw UnboundVariableError(s);
    names.push_back(s);
    args.push_back(DiffScalar::variable(it->second, i, nseeds, order));
  }
  for (const auto& [k, v] : binding) {
    if (std::find(seeds.begin(), seeds.end(), k) != seeds.end()) continue;
    names.push_back(k);
    args.push_back(nseeds > 0 ? DiffScalar::constant(v, nseeds, order) : DiffScalar(v));
  }
  return CompiledExpression(*this, names).evaluate(std::span<const DiffScalar>(args));
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.op != b.op || a.args.size() != b.args.size()) return false;
  switch (a.op) {
    case Op::Number:
      if (a.number != b.number) return false;
      break;
    case Op::Variable:
      if (a.name != b.name) return false;
      break;
    case Op::Call:
      if (a.function != b.function) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

bool operator==(const Expression& a, const Expression& b) { return structurally_equal(*a.root_, *b.root_); }

CompiledExpression::CompiledExpression(const Expression& expression, std::span<const std::string> names)
    : expression_(expression), arity_(names.size()) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], static_cast<int>(i));
  compile(expression.root_ptr(), index, code_);
}

template <class S>
S CompiledExpression::run(std::span<const S> args) const {
  if (args.size() != arity_) throw EvalError("argument count does not match the compiled variable list");
  std::vector<S> stack;
  stack.reserve(code_.size());
  for (const auto& ins : code_) {
    switch (ins.op) {
      case Op::Number: stack.emplace_back(ins.number); break;
      case Op::Variable: stack.push_back(args[static_cast<std::size_t>(ins.variable)]); break;
      case Op::Negate: stack.back() = -stack.back(); break;
      case Op::Add: {
        S r = stack.back();
        stack.pop_back();
        stack.back() = stack.back() + r;
        break;
      }
      case Op::Subtract: {
        S r = stack.back();
        stack.pop_back();
        stack.back() = stack.back() - r;
        break;
      }
      case Op::Multiply: {
        S r = stack.back();
        stack.pop_back();
        stack.back() = stack.back() * r;
        break;
      }
      case Op::Divide: {
        S r = stack.back();
        stack.pop_back();
        if (value_of(r) == 0.0) throw DomainError("division by zero", subexpr(ins.node));
        stack.back() = stack.back() / r;
        break;
      }
      case Op::Power: {
        if (ins.has_int_exponent) {
          S base = stack.back();
          if (ins.int_exponent < 0) {
            if (value_of(base) == 0.0) throw DomainError("negative power of zero", subexpr(ins.node));
            stack.back() = S(1.0) / ipow(base, ins.int_exponent);
          } else {
            stack.back() = ipow(base, ins.int_exponent);
          }
          break;
        }
        S e = stack.back();
        stack.pop_back();
        stack.back() = real_power(stack.back(), e, ins.node);
        break;
      }
      case Op::Call: {
        if (ins.function == Function::Pow) {
          S e = stack.back();
          stack.pop_back();
          int k = 0;
          if (literal_int_exponent(*ins.node->args[1], k)) {
            if (k < 0) {
              if (value_of(stack.back()) == 0.0) throw DomainError("negative power of zero", subexpr(ins.node));
              stack.back() = S(1.0) / ipow(stack.back(), k);
            } else {
              stack.back() = ipow(stack.back(), k);
            }
          } else {
            stack.back() = real_power(stack.back(), e, ins.node);
          }
          break;
        }
        stack.back() = apply_function(ins.function, stack.back(), ins.node);
        break;
      }
    }
  }
  return stack.back();
}

double CompiledExpression::evaluate(std::span<const double> args) const { return run<double>(args); }

DiffScalar CompiledExpression::evaluate(std::span<const DiffScalar> args) const { return run<DiffScalar>(args); }

}  // namespace jetplasma::expr
