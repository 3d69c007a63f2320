#include <doctest.h>

#include <functional>

#include "seqslice/corpus.hpp"
#include "seqslice/minilang.hpp"

using namespace seqslice;
using namespace seqslice::lang;

namespace {

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

const char* kExampleOne =
    "int pick ( ) {\n"
    "int A = 3 ;\n"
    "int B = 4 ;\n"
    "int C = 5 ;\n"
    "int D = 6 ;\n"
    "int E = 7 ;\n"
    "int temp ;\n"
    "if ( C <= A ) {\n"
    "A = B ;\n"
    "D = E ;\n"
    "C = D ;\n"
    "temp = B ;\n"
    "}\n"
    "return temp ;\n"
    "}\n";

}  // namespace

TEST_CASE("tokenize splits on maximal munch") {
  CHECK(texts(tokenize("int a = 1 ;")) == std::vector<std::string>{"int", "a", "=", "1", ";"});
  CHECK(texts(tokenize("if(C <= A){")) ==
        std::vector<std::string>{"if", "(", "C", "<=", "A", ")", "{"});
  CHECK(texts(tokenize("a=$b")) == std::vector<std::string>{"a", "=", "$", "b"});
  CHECK(texts(tokenize("x==y&&!z // note\n/* block */ w")) ==
        std::vector<std::string>{"x", "==", "y", "&&", "!", "z", "w"});
}

TEST_CASE("tokenize tracks lines and kinds") {
  const auto toks = tokenize("int a ;\n  a = 12 ;");
  REQUIRE(toks.size() == 7);
  CHECK(toks[0].kind == TokenKind::keyword);
  CHECK(toks[1].kind == TokenKind::identifier);
  CHECK(toks[3].line == 2);
  CHECK(toks[3].col == 3);
  CHECK(toks[5].kind == TokenKind::int_literal);
}

TEST_CASE("tokenize_numbered marks line prefixes") {
  const auto toks = tokenize_numbered("7 : int temp\n12 : temp = B ;");
  REQUIRE(toks.size() == 10);
  CHECK(toks[0].kind == TokenKind::line_marker);
  CHECK(toks[1].kind == TokenKind::line_marker);
  CHECK(toks[2].text == "int");
  CHECK(toks[4].kind == TokenKind::line_marker);
  CHECK(toks[4].text == "12");
}

TEST_CASE("statements are classified by their leading tokens") {
  const auto st = split_statements(tokenize(kExampleOne));
  REQUIRE(st.size() == 15);
  CHECK(st[0].kind == StatementKind::method_header);
  CHECK(st[6].kind == StatementKind::decl);
  CHECK(st[7].kind == StatementKind::if_header);
  CHECK(st[8].kind == StatementKind::assign);
  CHECK(st[12].kind == StatementKind::close_brace);
  CHECK(st[13].kind == StatementKind::return_stmt);
  CHECK(classify(tokenize("else {")) == StatementKind::else_header);
  CHECK(classify(tokenize("for ( int i = 0 ; i < 3 ; i = i + 1 ) {")) == StatementKind::for_header);
  CHECK(classify(tokenize("while ( x ) {")) == StatementKind::while_header);
}

TEST_CASE("render_slice prefixes original line numbers") {
  const auto st = split_statements(tokenize(kExampleOne));
  const std::vector<Statement> picked{st[6], st[7], st[11]};
  CHECK(render_slice(picked) == "7 : int temp ;\n8 : if ( C <= A ) {\n12 : temp = B ;");
  CHECK(render_slice({}).empty());
  CHECK(render_slice({st[12]}) == "13 : }");
  CHECK_THROWS_AS(render_slice({st[7], st[6]}), OrderingError);
}

TEST_CASE("render_program round-trips canonical programs") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::string program = corpus::generate_program(seed);
    const auto st = split_statements(tokenize(program));
    CHECK(texts(tokenize(render_program(st))) == texts(tokenize(program)));
  }
}

TEST_CASE("well-formed programs parse without error nodes") {
  const AstNode root = parse_source(kExampleOne);
  CHECK(root.label == "program");
  CHECK(count_errors(root) == 0);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const AstNode r = parse_source(corpus::generate_program(seed));
    CHECK(count_errors(r) == 0);
    CHECK(count_nodes(r) == preorder_labels(r).size());
  }
}

TEST_CASE("count_nodes") {
  AstNode leaf{"x", {}, 1, 1, false};
  CHECK(count_nodes(leaf) == 1);
  AstNode root{"r", {leaf, leaf}, 1, 1, false};
  CHECK(count_nodes(root) == 3);
}

TEST_CASE("a cut-off prefix keeps its partial subtrees") {
  const AstNode root = parse_source("int temp\nif ( C <= A ) {");
  REQUIRE(root.children.size() == 2);
  CHECK(root.children[0].label == "local_decl");
  const AstNode& open_if = root.children[1];
  CHECK(open_if.label == "if_stmt");
  REQUIRE(open_if.children.size() == 2);
  CHECK(open_if.children[0].label == "binary_expr");
  CHECK(open_if.children[1].label == "block");
  CHECK(open_if.children[1].children.empty());
  // a missing operand is the one piece that stands in as an error leaf
  const AstNode cut = parse_source("int x = a +");
  CHECK(count_errors(cut) == 1);
  CHECK(preorder_labels(cut).back() == std::string(kErrorLabel));
}

TEST_CASE("error nodes are leaves and child spans nest") {
  std::function<void(const AstNode&)> walk = [&](const AstNode& n) {
    if (n.is_error) CHECK(n.children.empty());
    int prev = 0;
    for (const auto& c : n.children) {
      CHECK(c.first_line >= n.first_line);
      CHECK(c.last_line <= n.last_line);
      CHECK(c.first_line >= prev);
      prev = c.first_line;
      walk(c);
    }
  };
  walk(parse_source("int f ( ) {\nint a = 1\nif ( a > ) {\na = = 2 ;\n}\n"));
  walk(parse_source(corpus::generate_program(17)));
}

TEST_CASE("missing semicolons keep the tree size close to intact") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::string program = corpus::generate_program(seed);
    std::string stripped;
    for (char c : program)
      if (c != ';') stripped += c;
    const double intact = static_cast<double>(count_nodes(parse_source(program)));
    const double broken = static_cast<double>(count_nodes(parse_source(stripped)));
    CHECK(std::abs(broken - intact) / intact <= 0.15);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("node count never shrinks as a token prefix grows") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto toks = tokenize(corpus::generate_program(seed));
    std::size_t prev = 0;
    for (std::size_t n = 0; n <= toks.size(); ++n) {
      const std::vector<Token> prefix(toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(n));
      const std::size_t count = count_nodes(parse_tolerant(prefix));
      CHECK(count >= prev);
      prev = count;
    }
  }
}

TEST_CASE("parse_tolerant is total on junk") {
  for (const char* junk : {"", "}}}", "{ { {", "if if ( ) ;", "int = ;", "$ @ #", "else", "for ( ; ; )",
                           "class X { int f ( ) { return ; }"}) {
    const AstNode root = parse_source(junk);
    CHECK(root.label == "program");
  }
}

TEST_CASE("split_lines") {
  CHECK(split_lines("a\r\nb\n") == std::vector<std::string>{"a", "b"});
  CHECK(split_lines("").empty());
}
