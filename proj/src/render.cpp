#include <map>

#include "seqslice/minilang.hpp"

namespace seqslice::lang {

std::string_view to_string(StatementKind kind) {
  switch (kind) {
    case StatementKind::decl: return "decl";
    case StatementKind::assign: return "assign";
    case StatementKind::if_header: return "if_header";
    case StatementKind::else_header: return "else_header";
    case StatementKind::while_header: return "while_header";
    case StatementKind::for_header: return "for_header";
    case StatementKind::return_stmt: return "return";
    case StatementKind::open_brace: return "open_brace";
    case StatementKind::close_brace: return "close_brace";
    case StatementKind::method_header: return "method_header";
    case StatementKind::class_header: return "class_header";
    case StatementKind::other: return "other";
  }
  return "other";
}

std::string Statement::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

StatementKind classify(const std::vector<Token>& toks) {
  if (toks.empty()) return StatementKind::other;
  const Token& first = toks.front();
  if (first.is("class")) return StatementKind::class_header;
  if (is_type_keyword(first.text)) {
    if (toks.size() > 2 && toks[1].kind == TokenKind::identifier && toks[2].is("(")) {
      return StatementKind::method_header;
    }
    return StatementKind::decl;
  }
  if (first.is("if")) return StatementKind::if_header;
  if (first.is("else")) return StatementKind::else_header;
  if (first.is("while")) return StatementKind::while_header;
  if (first.is("for")) return StatementKind::for_header;
  if (first.is("return")) return StatementKind::return_stmt;
  if (first.is("{")) return StatementKind::open_brace;
  if (first.is("}")) {
    if (toks.size() > 1 && toks[1].is("else")) return StatementKind::else_header;
    return StatementKind::close_brace;
  }
  if (first.kind == TokenKind::identifier && toks.size() > 1 && toks[1].is("=")) {
    return StatementKind::assign;
  }
  return StatementKind::other;
}

std::vector<Statement> split_statements(const std::vector<Token>& tokens) {
  std::vector<Statement> out;
  for (const auto& t : tokens) {
    if (out.empty() || out.back().line != t.line) {
      Statement s;
      s.line = t.line;
      out.push_back(std::move(s));
    }
    out.back().tokens.push_back(t);
  }
  for (auto& s : out) s.kind = classify(s.tokens);
  return out;
}

std::string render_program(const std::vector<Statement>& statements) {
  std::string out;
  for (const auto& s : statements) {
    out += s.text();
    out += '\n';
  }
  return out;
}

std::string render_slice(const std::vector<Statement>& statements) {
  std::string out;
  int last = 0;
  for (const auto& s : statements) {
    if (s.line <= last) {
      throw OrderingError("render_slice: line " + std::to_string(s.line) +
                          " does not follow line " + std::to_string(last));
    }
    last = s.line;
    if (!out.empty()) out += '\n';
    out += std::to_string(s.line);
    out += " : ";
    out += s.text();
  }
  return out;
}

}  // namespace seqslice::lang
