#pragma once

// A small Java-flavoured imperative language: lexer, error-tolerant
// recursive-descent parser and canonical line-oriented rendering.
//
//   program    := (class_decl | method_decl | stmt)*
//   class_decl := "class" IDENT "{" method_decl* "}"
//   method_decl:= type IDENT "(" ")" block
//   block      := "{" stmt* "}"
//   stmt       := decl ";" | assign ";" | if | while | for
//               | "return" expr? ";" | block
//   decl       := type IDENT ("=" expr)?
//   assign     := IDENT "=" expr
//   if         := "if" "(" expr ")" block ("else" block)?
//   while      := "while" "(" expr ")" block
//   for        := "for" "(" decl ";" expr ";" assign ")" block
//   type       := "int" | "long" | "boolean"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqslice/error.hpp"

namespace seqslice::lang {

SEQSLICE_DEFINE_ERROR(OrderingError, true);

enum class TokenKind { keyword, identifier, int_literal, op, punct, line_marker };

struct Token {
  std::string text;
  TokenKind kind = TokenKind::punct;
  int line = 1;
  int col = 1;

  bool is(std::string_view t) const { return text == t; }
};

/// Maximal-munch lexer. Whitespace and comments are dropped; any character
/// that starts no token becomes a one-character punct token. Total.
std::vector<Token> tokenize(std::string_view source);

/// Lexes rendered slice text ("7 : int temp ;" per line): the leading line
/// number and ':' of every line come back as line_marker tokens.
std::vector<Token> tokenize_numbered(std::string_view text);

bool is_keyword(std::string_view word);
bool is_type_keyword(std::string_view word);
/// Every keyword, operator and punctuation spelling the lexer knows.
const std::vector<std::string>& fixed_spellings();

enum class StatementKind {
  decl,
  assign,
  if_header,
  else_header,
  while_header,
  for_header,
  return_stmt,
  open_brace,
  close_brace,
  method_header,
  class_header,
  other
};

std::string_view to_string(StatementKind kind);

struct Statement {
  int line = 0;
  std::vector<Token> tokens;
  StatementKind kind = StatementKind::other;

  /// Token texts joined by single spaces.
  std::string text() const;
};

/// Groups tokens by source line (one statement per line in canonical form).
std::vector<Statement> split_statements(const std::vector<Token>& tokens);
StatementKind classify(const std::vector<Token>& line_tokens);

/// One statement per line, tokens separated by single spaces.
std::string render_program(const std::vector<Statement>& statements);

/// "L : tokens" per statement joined by '\n'. Throws OrderingError unless the
/// statements are strictly ordered by line.
std::string render_slice(const std::vector<Statement>& statements);

struct AstNode {
  std::string label;
  std::vector<AstNode> children;
  int first_line = 0;
  int last_line = 0;
  bool is_error = false;
};

inline constexpr std::string_view kErrorLabel = "ERROR";

/// Never fails. On a rule failure the offending tokens up to the next
/// statement boundary (';', '{', '}' or a line break) become a single error
/// leaf and parsing resumes. A line break or end of input may stand in for a
/// statement's ';'; a '}' on the same line keeps the statement and adds an
/// error leaf. Input that stops mid-rule keeps whatever partial node it had
/// built; only a missing operand becomes an error leaf, and blocks left open
/// at end of input are closed silently.
AstNode parse_tolerant(const std::vector<Token>& tokens);

std::size_t count_nodes(const AstNode& root);
std::size_t count_errors(const AstNode& root);
/// Labels in preorder.
std::vector<std::string> preorder_labels(const AstNode& root);

/// Convenience: tokenize + parse.
AstNode parse_source(std::string_view source);

/// Splits text into lines ('\n', optional trailing '\r' stripped).
std::vector<std::string> split_lines(std::string_view text);

}  // namespace seqslice::lang
