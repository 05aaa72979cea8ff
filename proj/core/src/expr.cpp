#include "semqo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "semqo/table.hpp"

namespace semqo {

bool try_parse_number(const std::string& text, double& out) {
  std::size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return false;
  std::size_t end = text.find_last_not_of(" \t\r\n") + 1;
  std::string trimmed = text.substr(begin, end - begin);
  if (trimmed.empty()) return false;
  char* stop = nullptr;
  out = std::strtod(trimmed.c_str(), &stop);
  return stop == trimmed.c_str() + trimmed.size();
}

std::string normalize_text(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

namespace detail {

enum class NodeKind {
  Literal,
  ValueRef,
  And,
  Or,
  Not,
  Compare,   // chained: operands.size() == ops.size() + 1
  Contains,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
};

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

struct ExprNode {
  NodeKind kind;
  ExprValue literal;
  std::vector<std::shared_ptr<const ExprNode>> children;
  std::vector<CmpOp> cmp_ops;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_node(NodeKind kind, std::vector<NodePtr> children = {}) {
  auto node = std::make_shared<ExprNode>();
  node->kind = kind;
  node->children = std::move(children);
  return node;
}

struct Token {
  enum class Type { Number, String, Ident, Op, End } type;
  std::string text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  bool accept_op(const std::string& op) {
    if (current_.type == Token::Type::Op && current_.text == op) {
      advance();
      return true;
    }
    return false;
  }

  bool accept_ident(const std::string& word) {
    if (current_.type == Token::Type::Ident && current_.text == word) {
      advance();
      return true;
    }
    return false;
  }

 private:
  void advance() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
    if (pos_ >= src_.size()) {
      current_ = {Token::Type::End, "", 0.0};
      return;
    }
    char ch = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(ch)) ||
        (ch == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      char* stop = nullptr;
      double v = std::strtod(src_.c_str() + pos_, &stop);
      std::size_t len = stop - (src_.c_str() + pos_);
      current_ = {Token::Type::Number, src_.substr(pos_, len), v};
      pos_ += len;
      return;
    }
    if (ch == '"' || ch == '\'') {
      char quote = ch;
      std::size_t end = src_.find(quote, pos_ + 1);
      if (end == std::string::npos) {
        throw InputError("unterminated string literal in expression");
      }
      current_ = {Token::Type::String, src_.substr(pos_ + 1, end - pos_ - 1), 0.0};
      pos_ = end + 1;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) ||
              src_[end] == '_')) {
        ++end;
      }
      current_ = {Token::Type::Ident, src_.substr(pos_, end - pos_), 0.0};
      pos_ = end;
      return;
    }
    static const char* kTwoChar[] = {"<=", ">=", "==", "!="};
    for (const char* op : kTwoChar) {
      if (src_.compare(pos_, 2, op) == 0) {
        current_ = {Token::Type::Op, op, 0.0};
        pos_ += 2;
        return;
      }
    }
    if (std::string("<>+-*/()").find(ch) != std::string::npos) {
      current_ = {Token::Type::Op, std::string(1, ch), 0.0};
      ++pos_;
      return;
    }
    throw InputError(std::string("unexpected character in expression: ") + ch);
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  Token current_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  NodePtr parse() {
    NodePtr root = parse_or();
    if (lex_.peek().type != Token::Type::End) {
      throw InputError("trailing tokens in expression near '" +
                       lex_.peek().text + "'");
    }
    return root;
  }

 private:
  NodePtr parse_or() {
    NodePtr left = parse_and();
    while (lex_.accept_ident("or")) {
      left = make_node(NodeKind::Or, {left, parse_and()});
    }
    return left;
  }

  NodePtr parse_and() {
    NodePtr left = parse_not();
    while (lex_.accept_ident("and")) {
      left = make_node(NodeKind::And, {left, parse_not()});
    }
    return left;
  }

  NodePtr parse_not() {
    if (lex_.accept_ident("not")) {
      return make_node(NodeKind::Not, {parse_not()});
    }
    return parse_comparison();
  }

  NodePtr parse_comparison() {
    NodePtr first = parse_additive();
    if (lex_.accept_ident("contains")) {
      return make_node(NodeKind::Contains, {first, parse_additive()});
    }
    std::vector<NodePtr> operands{first};
    std::vector<CmpOp> ops;
    while (true) {
      CmpOp op;
      if (lex_.accept_op("<=")) op = CmpOp::Le;
      else if (lex_.accept_op(">=")) op = CmpOp::Ge;
      else if (lex_.accept_op("==")) op = CmpOp::Eq;
      else if (lex_.accept_op("!=")) op = CmpOp::Ne;
      else if (lex_.accept_op("<")) op = CmpOp::Lt;
      else if (lex_.accept_op(">")) op = CmpOp::Gt;
      else break;
      ops.push_back(op);
      operands.push_back(parse_additive());
    }
    if (ops.empty()) return first;
    auto node = std::make_shared<ExprNode>();
    node->kind = NodeKind::Compare;
    node->children = std::move(operands);
    node->cmp_ops = std::move(ops);
    return node;
  }

  NodePtr parse_additive() {
    NodePtr left = parse_multiplicative();
    while (true) {
      if (lex_.accept_op("+")) {
        left = make_node(NodeKind::Add, {left, parse_multiplicative()});
      } else if (lex_.accept_op("-")) {
        left = make_node(NodeKind::Sub, {left, parse_multiplicative()});
      } else {
        return left;
      }
    }
  }

  NodePtr parse_multiplicative() {
    NodePtr left = parse_unary();
    while (true) {
      if (lex_.accept_op("*")) {
        left = make_node(NodeKind::Mul, {left, parse_unary()});
      } else if (lex_.accept_op("/")) {
        left = make_node(NodeKind::Div, {left, parse_unary()});
      } else {
        return left;
      }
    }
  }

  NodePtr parse_unary() {
    if (lex_.accept_op("-")) {
      return make_node(NodeKind::Neg, {parse_unary()});
    }
    return parse_primary();
  }

  NodePtr parse_primary() {
    Token t = lex_.peek();
    switch (t.type) {
      case Token::Type::Number: {
        lex_.take();
        auto node = std::make_shared<ExprNode>();
        node->kind = NodeKind::Literal;
        node->literal = t.number;
        return node;
      }
      case Token::Type::String: {
        lex_.take();
        auto node = std::make_shared<ExprNode>();
        node->kind = NodeKind::Literal;
        node->literal = t.text;
        return node;
      }
      case Token::Type::Ident: {
        lex_.take();
        if (t.text == "value") return make_node(NodeKind::ValueRef);
        if (t.text == "true" || t.text == "false") {
          auto node = std::make_shared<ExprNode>();
          node->kind = NodeKind::Literal;
          node->literal = (t.text == "true");
          return node;
        }
        throw InputError("unknown identifier in expression: " + t.text);
      }
      case Token::Type::Op:
        if (t.text == "(") {
          lex_.take();
          NodePtr inner = parse_or();
          if (!lex_.accept_op(")")) {
            throw InputError("missing ')' in expression");
          }
          return inner;
        }
        [[fallthrough]];
      default:
        throw InputError("unexpected token in expression near '" + t.text + "'");
    }
  }

  Lexer lex_;
};

double to_number(const ExprValue& v) {
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? 1.0 : 0.0;
  double out;
  if (try_parse_number(std::get<std::string>(v), out)) return out;
  throw EvalError("non-numeric value in numeric context: '" +
                  std::get<std::string>(v) + "'");
}

std::string to_text(const ExprValue& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
  double d = std::get<double>(v);
  if (d == std::floor(d) && std::abs(d) < 1e15) {
    return std::to_string(static_cast<long long>(d));
  }
  return std::to_string(d);
}

bool values_equal(const ExprValue& a, const ExprValue& b) {
  double x, y;
  bool an = std::holds_alternative<double>(a) ||
            (std::holds_alternative<std::string>(a) &&
             try_parse_number(std::get<std::string>(a), x));
  bool bn = std::holds_alternative<double>(b) ||
            (std::holds_alternative<std::string>(b) &&
             try_parse_number(std::get<std::string>(b), y));
  if (an && bn) return to_number(a) == to_number(b);
  if (std::holds_alternative<bool>(a) || std::holds_alternative<bool>(b)) {
    bool av = std::holds_alternative<bool>(a)
                  ? std::get<bool>(a)
                  : normalize_text(to_text(a)) == "true";
    bool bv = std::holds_alternative<bool>(b)
                  ? std::get<bool>(b)
                  : normalize_text(to_text(b)) == "true";
    return av == bv;
  }
  return normalize_text(to_text(a)) == normalize_text(to_text(b));
}

bool compare(CmpOp op, const ExprValue& a, const ExprValue& b) {
  switch (op) {
    case CmpOp::Eq: return values_equal(a, b);
    case CmpOp::Ne: return !values_equal(a, b);
    case CmpOp::Lt: return to_number(a) < to_number(b);
    case CmpOp::Le: return to_number(a) <= to_number(b);
    case CmpOp::Gt: return to_number(a) > to_number(b);
    case CmpOp::Ge: return to_number(a) >= to_number(b);
  }
  return false;
}

bool truthy(const ExprValue& v) {
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
  if (std::holds_alternative<double>(v)) return std::get<double>(v) != 0.0;
  throw EvalError("expected a boolean predicate result, got text: '" +
                  std::get<std::string>(v) + "'");
}

ExprValue eval_node(const ExprNode& node, const std::string& cell) {
  switch (node.kind) {
    case NodeKind::Literal: return node.literal;
    case NodeKind::ValueRef: return cell;
    case NodeKind::And:
      return truthy(eval_node(*node.children[0], cell)) &&
             truthy(eval_node(*node.children[1], cell));
    case NodeKind::Or:
      return truthy(eval_node(*node.children[0], cell)) ||
             truthy(eval_node(*node.children[1], cell));
    case NodeKind::Not:
      return !truthy(eval_node(*node.children[0], cell));
    case NodeKind::Compare: {
      for (std::size_t i = 0; i < node.cmp_ops.size(); ++i) {
        if (!compare(node.cmp_ops[i], eval_node(*node.children[i], cell),
                     eval_node(*node.children[i + 1], cell))) {
          return false;
        }
      }
      return true;
    }
    case NodeKind::Contains: {
      std::string haystack =
          normalize_text(to_text(eval_node(*node.children[0], cell)));
      std::string needle =
          normalize_text(to_text(eval_node(*node.children[1], cell)));
      return haystack.find(needle) != std::string::npos;
    }
    case NodeKind::Add:
      return to_number(eval_node(*node.children[0], cell)) +
             to_number(eval_node(*node.children[1], cell));
    case NodeKind::Sub:
      return to_number(eval_node(*node.children[0], cell)) -
             to_number(eval_node(*node.children[1], cell));
    case NodeKind::Mul:
      return to_number(eval_node(*node.children[0], cell)) *
             to_number(eval_node(*node.children[1], cell));
    case NodeKind::Div: {
      double denom = to_number(eval_node(*node.children[1], cell));
      if (denom == 0.0) throw EvalError("division by zero");
      return to_number(eval_node(*node.children[0], cell)) / denom;
    }
    case NodeKind::Neg:
      return -to_number(eval_node(*node.children[0], cell));
  }
  throw EvalError("corrupt expression node");
}

}  // namespace
}  // namespace detail

Expr::Expr(std::string text, std::shared_ptr<const detail::ExprNode> root)
    : text_(std::move(text)), root_(std::move(root)) {}

Expr Expr::parse(const std::string& text) {
  detail::Parser parser(text);
  return Expr(text, parser.parse());
}

ExprValue Expr::evaluate(const std::string& cell) const {
  return detail::eval_node(*root_, cell);
}

bool Expr::evaluate_predicate(const std::string& cell) const {
  return detail::truthy(evaluate(cell));
}

}  // namespace semqo
