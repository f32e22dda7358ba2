#pragma once

// Closed-form scalar field language.
//
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' unary)?
//   atom  := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//
// '^' is right-associative and binds tighter than unary minus, so -x^2 is
// -(x^2) and 2^3^2 is 2^9.  Functions: sin cos exp log sqrt tanh pow(a, b).

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jetplasma/diff_scalar.hpp"

namespace jetplasma::expr {

enum class Op { Number, Variable, Negate, Add, Subtract, Multiply, Divide, Power, Call };
enum class Function { Sin, Cos, Exp, Log, Sqrt, Tanh, Pow };

struct Node {
  Op op = Op::Number;
  double number = 0.0;
  std::string name;  // variable or function name
  Function function = Function::Sin;
  std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;

class Expression {
 public:
  Expression();
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  static Expression parse(std::string_view source);
  static Expression number(double v);
  static Expression variable(std::string name);

  std::string to_string() const;
  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  // Sorted, de-duplicated variable names referenced by the expression.
  std::vector<std::string> variables() const;
  bool references(std::string_view name) const;

  Expression renamed(const std::map<std::string, std::string>& mapping) const;

  // Plain evaluation against a name -> value binding.
  double evaluate(const std::map<std::string, double>& binding) const;

  // Differentiable evaluation: every variable named in `seeds` becomes an
  // independent seed variable (in that order); other variables are constants.
  // `order` must be in [0, 3].
  DiffScalar evaluate(const std::map<std::string, double>& binding, std::span<const std::string> seeds,
                      int order) const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  NodePtr root_;
};

bool structurally_equal(const Node& a, const Node& b);

/// An expression resolved against a fixed ordered variable list, evaluated
/// from positional arguments.  Immutable and safe to share across threads.
class CompiledExpression {
 public:
  CompiledExpression() = default;
  // Throws UnboundVariableError if the expression references a name not in `names`.
  CompiledExpression(const Expression& expression, std::span<const std::string> names);

  double evaluate(std::span<const double> args) const;
  DiffScalar evaluate(std::span<const DiffScalar> args) const;

  const Expression& expression() const { return expression_; }

  struct Instruction {
    Op op;
    Function function;
    double number;
    int variable;
    int int_exponent;  // valid for Power when has_int_exponent
    bool has_int_exponent;
    const Node* node;
  };

 private:
  template <class S>
  S run(std::span<const S> args) const;

  Expression expression_;
  std::vector<Instruction> code_;
  std::size_t arity_ = 0;
};

}  // namespace jetplasma::expr
