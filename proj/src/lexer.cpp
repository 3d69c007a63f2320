#include <algorithm>
#include <array>
#include <cctype>

#include "seqslice/minilang.hpp"

namespace seqslice::lang {

namespace {

constexpr std::array<std::string_view, 11> kKeywords = {
    "class", "int", "long", "boolean", "if", "else", "while", "for", "return", "true", "false"};

// Longest spellings first so the scan below is maximal munch.
constexpr std::array<std::string_view, 24> kOperators = {
    "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=",
    "%=", "+",  "-",  "*",  "/",  "%",  "<",  ">",  "=",  "!",  "&",  "|"};

constexpr std::array<std::string_view, 10> kPunct = {"(", ")", "{", "}", ";", ",", ":", "[", "]", "."};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

bool is_type_keyword(std::string_view word) {
  return word == "int" || word == "long" || word == "boolean";
}

const std::vector<std::string>& fixed_spellings() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> v;
    for (auto k : kKeywords) v.emplace_back(k);
    for (auto o : kOperators) v.emplace_back(o);
    for (auto p : kPunct) v.emplace_back(p);
    return v;
  }();
  return all;
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (std::isspace(c)) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      advance(2);
      while (i < src.size() && src.substr(i, 2) != "*/") advance(1);
      if (i < src.size()) advance(2);
      continue;
    }
    Token tok;
    tok.line = line;
    tok.col = col;
    std::size_t len = 0;
    if (ident_start(c)) {
      while (i + len < src.size() && ident_char(static_cast<unsigned char>(src[i + len]))) ++len;
      tok.text = std::string(src.substr(i, len));
      tok.kind = is_keyword(tok.text) ? TokenKind::keyword : TokenKind::identifier;
    } else if (std::isdigit(c)) {
      while (i + len < src.size() && std::isdigit(static_cast<unsigned char>(src[i + len]))) ++len;
      tok.text = std::string(src.substr(i, len));
      tok.kind = TokenKind::int_literal;
    } else {
      for (auto op : kOperators) {
        if (src.substr(i, op.size()) == op) {
          len = op.size();
          tok.kind = TokenKind::op;
          break;
        }
      }
      if (len == 0) {
        len = 1;
        tok.kind = TokenKind::punct;
        // Keep a multi-byte UTF-8 sequence together as one unknown token.
        if (c >= 0x80) {
          while (i + len < src.size() && (static_cast<unsigned char>(src[i + len]) & 0xC0) == 0x80) ++len;
        }
      }
      tok.text = std::string(src.substr(i, len));
    }
    advance(len);
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<Token> tokenize_numbered(std::string_view text) {
  auto tokens = tokenize(text);
  int current_line = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].line == current_line) continue;
    current_line = tokens[i].line;
    if (tokens[i].kind == TokenKind::int_literal && i + 1 < tokens.size() &&
        tokens[i + 1].line == current_line && tokens[i + 1].is(":")) {
      tokens[i].kind = TokenKind::line_marker;
      tokens[i + 1].kind = TokenKind::line_marker;
      ++i;
    }
  }
  return tokens;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(start) : text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace seqslice::lang
