#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>

namespace semqo {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runtime value of the expression mini-language.
using ExprValue = std::variant<bool, double, std::string>;

namespace detail {
struct ExprNode;
}

/// Compiled expression over a single cell bound to the identifier `value`.
///
/// Grammar: boolean and/or/not, comparisons (<, <=, >, >=, ==, !=) with
/// Python-style chaining (8.5 < value < 9), string `contains`, arithmetic
/// (+, -, *, /), numeric and quoted string literals.
class Expr {
 public:
  /// Throws InputError on a syntax error.
  static Expr parse(const std::string& text);

  /// Evaluates with `value` bound to the cell text. Throws EvalError on a
  /// type error (e.g., non-numeric cell in a numeric comparison).
  ExprValue evaluate(const std::string& cell) const;

  /// Evaluate and coerce to a predicate decision.
  bool evaluate_predicate(const std::string& cell) const;

  const std::string& text() const { return text_; }

 private:
  Expr(std::string text, std::shared_ptr<const detail::ExprNode> root);
  std::string text_;
  std::shared_ptr<const detail::ExprNode> root_;
};

/// Strict full-string numeric parse (surrounding whitespace allowed).
bool try_parse_number(const std::string& text, double& out);

/// Casefolded, whitespace-collapsed form used for text comparisons.
std::string normalize_text(const std::string& text);

}  // namespace semqo
