#include <array>

#include "seqslice/minilang.hpp"

namespace seqslice::lang {

namespace {

struct RuleFailure {};

AstNode leaf(std::string label, const Token& tok) {
  AstNode n;
  n.label = std::move(label);
  n.first_line = n.last_line = tok.line;
  return n;
}

AstNode error_leaf(int first, int last) {
  AstNode n;
  n.label = std::string(kErrorLabel);
  n.first_line = first;
  n.last_line = last;
  n.is_error = true;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {}

  AstNode program() {
    AstNode root;
    root.label = "program";
    while (!at_end()) {
      if (peek().is("class")) {
        root.children.push_back(guarded([this] { return class_decl(); }));
      } else if (looks_like_method()) {
        root.children.push_back(guarded([this] { return method_decl(); }));
      } else {
        root.children.push_back(statement());
      }
    }
    if (!root.children.empty()) {
      root.first_line = root.children.front().first_line;
      root.last_line = root.children.back().last_line;
    } else if (!toks_.empty()) {
      root.first_line = toks_.front().line;
      root.last_line = toks_.back().line;
    }
    return root;
  }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
  // Set once the input ran out inside a rule. From then on required pieces
  // are skipped: a prefix keeps every node it already had.
  bool eof_ = false;

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& peek(std::size_t ahead = 0) const {
    static const Token sentinel{"", TokenKind::punct, 0, 0};
    return pos_ + ahead < toks_.size() ? toks_[pos_ + ahead] : sentinel;
  }
  bool check(std::string_view text) const { return !at_end() && peek().is(text); }
  const Token& previous() const { return toks_[pos_ - 1]; }

  const Token& last_token() const {
    static const Token none{"", TokenKind::punct, 0, 0};
    return toks_.empty() ? none : toks_.back();
  }

  const Token& expect(std::string_view text) {
    if (at_end()) {
      eof_ = true;
      return last_token();
    }
    if (!check(text)) throw RuleFailure{};
    return toks_[pos_++];
  }

  const Token& expect_identifier() {
    if (at_end() || peek().kind != TokenKind::identifier) throw RuleFailure{};
    return toks_[pos_++];
  }

  // Appends the child built by `make`. When the input has run out the child
  // becomes a single error leaf, or nothing if an earlier piece already
  // stood in for the missing rest.
  template <class Make>
  void need(AstNode& parent, Make make) {
    if (eof_) return;
    if (at_end()) {
      eof_ = true;
      parent.children.push_back(error_leaf(last_token().line, last_token().line));
      return;
    }
    parent.children.push_back(make());
  }

  bool looks_like_method() const {
    return is_type_keyword(peek().text) && peek(1).kind == TokenKind::identifier &&
           peek(2).is("(");
  }

  // Runs a rule; on failure rewinds and turns the offending region into one
  // error leaf.
  template <class Rule>
  AstNode guarded(Rule rule) {
    const std::size_t start = pos_;
    const bool eof = eof_;
    try {
      return rule();
    } catch (const RuleFailure&) {
      pos_ = start;
      eof_ = eof;
      return synchronize();
    }
  }

  AstNode synchronize() {
    const Token& first = toks_[pos_++];
    int last_line = first.line;
    if (!(first.is(";") || first.is("{") || first.is("}"))) {
      while (!at_end()) {
        const Token& next = peek();
        if (next.line != previous().line || next.is("{") || next.is("}")) break;
        ++pos_;
        last_line = next.line;
        if (next.is(";")) break;
      }
    }
    return error_leaf(first.line, last_line);
  }

  // A line break or end of input stands in for a missing ';' (nothing is
  // skipped, so there is no error leaf). A '}' on the same line keeps the
  // statement but records the gap as an error leaf.
  void terminator(AstNode& node) {
    if (eof_) return;
    if (check(";")) {
      node.last_line = toks_[pos_++].line;
      return;
    }
    if (at_end() || peek().line != previous().line) return;
    if (peek().is("}")) {
      node.children.push_back(error_leaf(previous().line, previous().line));
      return;
    }
    throw RuleFailure{};
  }

  AstNode statement() {
    return guarded([this] { return strict_statement(); });
  }

  AstNode strict_statement() {
    if (at_end()) throw RuleFailure{};
    const Token& t = peek();
    if (is_type_keyword(t.text)) {
      AstNode n = declaration();
      terminator(n);
      return n;
    }
    if (t.kind == TokenKind::identifier && peek(1).is("=")) {
      AstNode n = assignment();
      terminator(n);
      return n;
    }
    if (t.is("if")) return if_statement();
    if (t.is("while")) return while_statement();
    if (t.is("for")) return for_statement();
    if (t.is("return")) return return_statement();
    if (t.is("{")) return block();
    throw RuleFailure{};
  }

  AstNode declaration() {
    AstNode n;
    n.label = "local_decl";
    const Token& type = toks_[pos_++];
    n.first_line = type.line;
    n.children.push_back(leaf("type", type));
    need(n, [this] { return leaf("identifier", expect_identifier()); });
    if (check("=")) {
      ++pos_;
      need(n, [this] { return expression(); });
    }
    n.last_line = previous().line;
    return n;
  }

  AstNode assignment() {
    AstNode n;
    n.label = "assign";
    const Token& target = expect_identifier();
    n.first_line = target.line;
    n.children.push_back(leaf("identifier", target));
    expect("=");
    need(n, [this] { return expression(); });
    n.last_line = previous().line;
    return n;
  }

  AstNode if_statement() {
    AstNode n;
    n.label = "if_stmt";
    n.first_line = expect("if").line;
    expect("(");
    need(n, [this] { return expression(); });
    expect(")");
    need(n, [this] { return block(); });
    n.last_line = n.children.empty() ? n.first_line : n.children.back().last_line;
    if (check("else")) {
      AstNode clause;
      clause.label = "else_clause";
      clause.first_line = clause.last_line = toks_[pos_++].line;
      need(clause, [this] { return check("if") ? if_statement() : block(); });
      if (!clause.children.empty()) clause.last_line = clause.children.back().last_line;
      n.children.push_back(std::move(clause));
      n.last_line = n.children.back().last_line;
    }
    return n;
  }

  AstNode while_statement() {
    AstNode n;
    n.label = "while_stmt";
    n.first_line = expect("while").line;
    expect("(");
    need(n, [this] { return expression(); });
    expect(")");
    need(n, [this] { return block(); });
    n.last_line = n.children.empty() ? n.first_line : n.children.back().last_line;
    return n;
  }

  AstNode for_statement() {
    AstNode n;
    n.label = "for_stmt";
    n.first_line = expect("for").line;
    expect("(");
    need(n, [this] {
      if (!is_type_keyword(peek().text)) throw RuleFailure{};
      return declaration();
    });
    separator();
    need(n, [this] { return expression(); });
    separator();
    need(n, [this] { return assignment(); });
    expect(")");
    need(n, [this] { return block(); });
    n.last_line = n.children.empty() ? n.first_line : n.children.back().last_line;
    return n;
  }

  // ';' inside a for header; tolerated when missing, like a statement's.
  void separator() {
    if (check(";")) ++pos_;
  }

  AstNode return_statement() {
    AstNode n;
    n.label = "return_stmt";
    const Token& kw = expect("return");
    n.first_line = n.last_line = kw.line;
    if (!at_end() && !check(";") && !check("}") && peek().line == kw.line) {
      n.children.push_back(expression());
    }
    n.last_line = previous().line;
    terminator(n);
    return n;
  }

  AstNode block() {
    AstNode n;
    n.label = "block";
    n.first_line = n.last_line = expect("{").line;
    while (true) {
      if (at_end()) {
        // left open: the missing '}' carries no node of its own
        eof_ = true;
        n.last_line = last_token().line;
        return n;
      }
      if (check("}")) {
        n.last_line = toks_[pos_++].line;
        return n;
      }
      n.children.push_back(statement());
    }
  }

  AstNode method_decl() {
    AstNode n;
    n.label = "method_decl";
    const Token& type = toks_[pos_++];
    n.first_line = type.line;
    n.children.push_back(leaf("type", type));
    n.children.push_back(leaf("identifier", expect_identifier()));
    expect("(");
    expect(")");
    need(n, [this] { return block(); });
    n.last_line = n.children.back().last_line;
    return n;
  }

  AstNode class_decl() {
    AstNode n;
    n.label = "class_decl";
    n.first_line = expect("class").line;
    need(n, [this] { return leaf("identifier", expect_identifier()); });
    n.last_line = expect("{").line;
    while (true) {
      if (at_end()) {
        eof_ = true;
        n.last_line = last_token().line;
        return n;
      }
      if (check("}")) {
        n.last_line = toks_[pos_++].line;
        return n;
      }
      if (looks_like_method()) {
        n.children.push_back(guarded([this] { return method_decl(); }));
      } else {
        n.children.push_back(statement());
      }
    }
  }

  // ---- expressions --------------------------------------------------------

  AstNode expression() { return binary_level(0); }

  static constexpr std::array<std::array<std::string_view, 4>, 6> kLevels = {{
      {"||", "", "", ""},
      {"&&", "", "", ""},
      {"==", "!=", "", ""},
      {"<", "<=", ">", ">="},
      {"+", "-", "", ""},
      {"*", "/", "%", ""},
  }};

  bool at_operator(std::size_t level) const {
    if (at_end() || peek().kind != TokenKind::op) return false;
    for (auto op : kLevels[level]) {
      if (!op.empty() && peek().is(op)) return true;
    }
    return false;
  }

  AstNode binary_level(std::size_t level) {
    if (level == kLevels.size()) return unary();
    AstNode lhs = binary_level(level + 1);
    while (at_operator(level)) {
      const Token& op = toks_[pos_++];
      AstNode rhs = binary_level(level + 1);
      AstNode n;
      n.label = "binary_expr";
      n.first_line = lhs.first_line;
      n.last_line = rhs.last_line;
      n.children.push_back(std::move(lhs));
      n.children.push_back(leaf(op.text, op));
      n.children.push_back(std::move(rhs));
      lhs = std::move(n);
    }
    return lhs;
  }

  AstNode unary() {
    if (check("!") || check("-")) {
      const Token& op = toks_[pos_++];
      AstNode n;
      n.label = "unary_expr";
      n.children.push_back(leaf(op.text, op));
      n.children.push_back(unary());
      n.first_line = op.line;
      n.last_line = n.children.back().last_line;
      return n;
    }
    return primary();
  }

  AstNode primary() {
    if (at_end()) {
      // operand cut off by the end of input
      eof_ = true;
      return error_leaf(last_token().line, last_token().line);
    }
    const Token& t = peek();
    if (t.kind == TokenKind::int_literal) {
      ++pos_;
      return leaf("int_literal", t);
    }
    if (t.is("true") || t.is("false")) {
      ++pos_;
      return leaf("bool_literal", t);
    }
    if (t.kind == TokenKind::identifier) {
      ++pos_;
      if (!check("(")) return leaf("identifier", t);
      // Calls are opaque: callee plus argument expressions.
      AstNode call;
      call.label = "call_expr";
      call.first_line = t.line;
      call.children.push_back(leaf("identifier", t));
      ++pos_;
      if (!check(")")) {
        call.children.push_back(expression());
        while (check(",")) {
          ++pos_;
          call.children.push_back(expression());
        }
      }
      call.last_line = expect(")").line;
      return call;
    }
    if (t.is("(")) {
      AstNode n;
      n.label = "paren_expr";
      n.first_line = toks_[pos_++].line;
      n.children.push_back(expression());
      n.last_line = expect(")").line;
      return n;
    }
    throw RuleFailure{};
  }
};

void count_into(const AstNode& n, std::size_t& total, std::size_t& errors) {
  ++total;
  if (n.is_error) ++errors;
  for (const auto& c : n.children) count_into(c, total, errors);
}

void preorder_into(const AstNode& n, std::vector<std::string>& out) {
  out.push_back(n.label);
  for (const auto& c : n.children) preorder_into(c, out);
}

}  // namespace

AstNode parse_tolerant(const std::vector<Token>& tokens) {
  return Parser(tokens).program();
}

AstNode parse_source(std::string_view source) { return parse_tolerant(tokenize(source)); }

std::size_t count_nodes(const AstNode& root) {
  std::size_t total = 0, errors = 0;
  count_into(root, total, errors);
  return total;
}

std::size_t count_errors(const AstNode& root) {
  std::size_t total = 0, errors = 0;
  count_into(root, total, errors);
  return errors;
}

std::vector<std::string> preorder_labels(const AstNode& root) {
  std::vector<std::string> out;
  preorder_into(root, out);
  return out;
}

}  // namespace seqslice::lang
