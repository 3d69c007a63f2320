#include "seqslice/oracle.hpp"

#include <algorithm>

namespace seqslice::oracle {

namespace {

using lang::AstNode;

// A variable is identified by its declaration line; undeclared names (inputs
// to the snippet) share line 0.
using VarKey = std::pair<std::string, int>;

struct StmtFacts {
  int line = 0;
  std::set<VarKey> defs;
  std::set<VarKey> uses;
  int control_parent = 0;
};

class Analyzer {
 public:
  void run(const AstNode& root) {
    scopes_.emplace_back();
    for (const auto& child : root.children) top_level(child);
  }

  std::map<int, StmtFacts> facts;
  std::map<int, std::set<int>> successors;
  std::map<int, BlockLines> blocks;
  std::map<VarKey, int> declarations;

 private:
  std::vector<std::map<std::string, int>> scopes_;
  std::vector<int> control_stack_;

  void top_level(const AstNode& n) {
    if (n.label == "method_decl") {
      scoped([&] { sequence(n.children.back().children, {}); });
    } else if (n.label == "class_decl") {
      for (const auto& c : n.children)
        if (c.label == "method_decl") top_level(c);
    } else {
      // Bare statements at top level form one straight-line region.
      top_exits_ = statement(n, top_exits_);
    }
  }

  std::set<int> top_exits_;

  template <class F>
  void scoped(F&& body) {
    scopes_.emplace_back();
    body();
    scopes_.pop_back();
  }

  VarKey resolve(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto found = it->find(name);
      if (found != it->end()) return {name, found->second};
    }
    return {name, 0};
  }

  void collect_uses(const AstNode& expr, std::set<VarKey>& out) const {
    if (expr.label == "identifier") {
      out.insert(resolve(name_of(expr)));
      return;
    }
    if (expr.label == "call_expr") {
      for (std::size_t i = 1; i < expr.children.size(); ++i) collect_uses(expr.children[i], out);
      return;
    }
    for (const auto& c : expr.children) collect_uses(c, out);
  }

  // Identifier leaves do not carry their text; names are looked up by the
  // caller through the statement tokens. See name_of().
  std::string name_of(const AstNode& ident) const {
    auto it = names_.find(&ident);
    return it == names_.end() ? std::string() : it->second;
  }

 public:
  std::map<const AstNode*, std::string> names_;

 private:
  StmtFacts& add_stmt(const AstNode& n, const std::set<int>& preds) {
    const int line = n.first_line;
    if (facts.count(line)) {
      throw AnalysisError("more than one statement on line " + std::to_string(line));
    }
    StmtFacts& f = facts[line];
    f.line = line;
    f.control_parent = control_stack_.empty() ? 0 : control_stack_.back();
    successors[line];
    for (int p : preds) successors[p].insert(line);
    return f;
  }

  void declare(const AstNode& decl, StmtFacts& f) {
    const std::string name = name_of(decl.children[1]);
    if (decl.children.size() > 2) collect_uses(decl.children[2], f.uses);
    scopes_.back()[name] = decl.first_line;
    const VarKey key{name, decl.first_line};
    declarations[key] = decl.first_line;
    f.defs.insert(key);
  }

  void assign(const AstNode& as, StmtFacts& f) {
    collect_uses(as.children[1], f.uses);
    f.defs.insert(resolve(name_of(as.children[0])));
  }

  std::set<int> sequence(const std::vector<AstNode>& stmts, std::set<int> preds) {
    for (const auto& s : stmts) preds = statement(s, preds);
    return preds;
  }

  std::set<int> statement(const AstNode& n, const std::set<int>& preds) {
    if (n.label == "local_decl") {
      StmtFacts& f = add_stmt(n, preds);
      declare(n, f);
      return {n.first_line};
    }
    if (n.label == "assign") {
      StmtFacts& f = add_stmt(n, preds);
      assign(n, f);
      return {n.first_line};
    }
    if (n.label == "return_stmt") {
      StmtFacts& f = add_stmt(n, preds);
      if (!n.children.empty()) collect_uses(n.children[0], f.uses);
      return {};
    }
    if (n.label == "block") {
      std::set<int> out;
      scoped([&] { out = sequence(n.children, preds); });
      return out;
    }
    if (n.label == "if_stmt") return if_statement(n, preds);
    if (n.label == "while_stmt") {
      const int h = n.first_line;
      StmtFacts& f = add_stmt(n, preds);
      collect_uses(n.children[0], f.uses);
      blocks[h] = {h, n.children[1].last_line, 0, 0};
      control_stack_.push_back(h);
      std::set<int> body_exits;
      scoped([&] { body_exits = sequence(n.children[1].children, {h}); });
      control_stack_.pop_back();
      for (int e : body_exits) successors[e].insert(h);
      return {h};
    }
    if (n.label == "for_stmt") {
      const int h = n.first_line;
      std::set<int> body_exits;
      scoped([&] {
        StmtFacts& f = add_stmt(n, preds);
        declare(n.children[0], f);
        collect_uses(n.children[1], f.uses);
        assign(n.children[2], f);
        blocks[h] = {h, n.children[3].last_line, 0, 0};
        control_stack_.push_back(h);
        scoped([&] { body_exits = sequence(n.children[3].children, {h}); });
        control_stack_.pop_back();
      });
      for (int e : body_exits) successors[e].insert(h);
      return {h};
    }
    throw AnalysisError("unsupported construct '" + n.label + "' on line " +
                        std::to_string(n.first_line));
  }

  std::set<int> if_statement(const AstNode& n, const std::set<int>& preds) {
    const int h = n.first_line;
    StmtFacts& f = add_stmt(n, preds);
    collect_uses(n.children[0], f.uses);
    BlockLines bl{h, n.children[1].last_line, 0, 0};
    control_stack_.push_back(h);
    std::set<int> exits;
    scoped([&] { exits = sequence(n.children[1].children, {h}); });
    if (n.children.size() > 2) {
      const AstNode& clause = n.children[2];
      const AstNode& body = clause.children[0];
      bl.else_header = clause.first_line;
      bl.else_close = body.last_line;
      std::set<int> else_exits;
      if (body.label == "if_stmt") {
        else_exits = if_statement(body, {h});
      } else {
        scoped([&] { else_exits = sequence(body.children, {h}); });
      }
      exits.insert(else_exits.begin(), else_exits.end());
    } else {
      exits.insert(h);
    }
    control_stack_.pop_back();
    blocks[h] = bl;
    return exits;
  }
};

// Pairs identifier leaves with their spelling by walking tokens in order:
// the parser emits identifier leaves in source order.
void bind_names(const AstNode& root, const std::vector<lang::Statement>& program,
                std::map<const AstNode*, std::string>& names) {
  std::vector<const lang::Token*> idents;
  for (const auto& s : program)
    for (const auto& t : s.tokens)
      if (t.kind == lang::TokenKind::identifier) idents.push_back(&t);
  std::vector<const AstNode*> leaves;
  std::vector<const AstNode*> stack{&root};
  // Preorder visits identifier leaves in source order for this grammar.
  while (!stack.empty()) {
    const AstNode* n = stack.back();
    stack.pop_back();
    if (n->label == "identifier") leaves.push_back(n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
  if (leaves.size() != idents.size()) {
    throw AnalysisError("identifier count mismatch between tokens and syntax tree");
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) names[leaves[i]] = idents[i]->text;
}

// The tolerant parser closes blocks left open at the end and lets a line
// break stand in for ';'. The oracle wants the strict form of both.
void require_strict_form(const std::vector<lang::Statement>& program) {
  using K = lang::StatementKind;
  int depth = 0;
  for (const auto& st : program) {
    for (const auto& t : st.tokens) {
      if (t.text == "{") ++depth;
      if (t.text == "}" && --depth < 0)
        throw AnalysisError("unmatched '}' on line " + std::to_string(st.line));
    }
    const bool simple = st.kind == K::decl || st.kind == K::assign || st.kind == K::return_stmt;
    if (simple && (st.tokens.empty() || st.tokens.back().text != ";"))
      throw AnalysisError("missing ';' on line " + std::to_string(st.line));
  }
  if (depth != 0) throw AnalysisError("unclosed block at end of program");
}

}  // namespace

bool Pdg::has_node(int line) const {
  return std::binary_search(nodes.begin(), nodes.end(), line);
}

Pdg build_pdg(const std::vector<lang::Statement>& program, const AstNode& root) {
  if (lang::count_errors(root) != 0) {
    throw AnalysisError("program does not parse cleanly; the oracle needs well-formed code");
  }
  require_strict_form(program);
  Analyzer an;
  bind_names(root, program, an.names_);
  an.run(root);

  Pdg pdg;
  for (const auto& [line, f] : an.facts) pdg.nodes.push_back(line);
  pdg.blocks = an.blocks;

  // Iterative reaching definitions over the statement CFG.
  std::map<int, std::set<int>> preds;
  for (const auto& [from, tos] : an.successors)
    for (int to : tos) preds[to].insert(from);
  using Def = std::pair<int, VarKey>;
  std::map<int, std::set<Def>> in, out;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int line : pdg.nodes) {
      std::set<Def> incoming;
      for (int p : preds[line]) incoming.insert(out[p].begin(), out[p].end());
      const auto& f = an.facts.at(line);
      std::set<Def> produced;
      for (const auto& d : incoming)
        if (!f.defs.count(d.second)) produced.insert(d);
      for (const auto& v : f.defs) produced.insert({line, v});
      if (incoming != in[line] || produced != out[line]) {
        in[line] = std::move(incoming);
        out[line] = std::move(produced);
        changed = true;
      }
    }
  }

  std::set<Edge> data, control;
  for (const auto& [line, f] : an.facts) {
    for (const auto& [def_line, var] : in[line])
      if (f.uses.count(var)) data.insert({line, def_line});
    auto link_decl = [&](const VarKey& v) {
      if (v.second != 0 && v.second != line) data.insert({line, v.second});
    };
    for (const auto& v : f.uses) link_decl(v);
    for (const auto& v : f.defs) link_decl(v);
    if (f.control_parent != 0) control.insert({line, f.control_parent});
  }
  pdg.data_edges.assign(data.begin(), data.end());
  pdg.control_edges.assign(control.begin(), control.end());

  for (const auto& s : program) {
    if (!pdg.has_node(s.line)) continue;
    auto& ids = pdg.identifiers[s.line];
    for (const auto& t : s.tokens)
      if (t.kind == lang::TokenKind::identifier) ids.insert(t.text);
  }
  return pdg;
}

Pdg build_pdg(std::string_view program_text) {
  const auto tokens = lang::tokenize(program_text);
  return build_pdg(lang::split_statements(tokens), lang::parse_tolerant(tokens));
}

std::vector<int> dependence_closure(const Pdg& pdg, int line) {
  std::map<int, std::vector<int>> adjacency;
  for (const auto& [from, to] : pdg.data_edges) adjacency[from].push_back(to);
  for (const auto& [from, to] : pdg.control_edges) adjacency[from].push_back(to);

  std::set<int> seen{line};
  std::vector<int> stack{line};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    auto it = adjacency.find(cur);
    if (it == adjacency.end()) continue;
    for (int next : it->second) {
      if (next > line || seen.count(next)) continue;
      seen.insert(next);
      stack.push_back(next);
    }
  }
  return {seen.begin(), seen.end()};
}

std::vector<int> close_structure(const Pdg& pdg, const std::vector<int>& lines) {
  std::set<int> out(lines.begin(), lines.end());
  for (int line : lines) {
    auto it = pdg.blocks.find(line);
    if (it == pdg.blocks.end()) continue;
    const BlockLines& b = it->second;
    out.insert(b.close);
    if (b.else_header != 0) {
      const bool inside_else = std::any_of(lines.begin(), lines.end(), [&](int l) {
        return l > b.else_header && l < b.else_close;
      });
      if (inside_else || std::count(lines.begin(), lines.end(), b.else_header)) {
        out.insert(b.else_header);
        out.insert(b.else_close);
      }
    }
  }
  return {out.begin(), out.end()};
}

std::vector<int> backward_slice(const Pdg& pdg, const SliceCriterion& criterion) {
  if (!pdg.has_node(criterion.line)) {
    throw CriterionError("line " + std::to_string(criterion.line) + " holds no statement");
  }
  const auto ids = pdg.identifiers.find(criterion.line);
  if (ids == pdg.identifiers.end() || !ids->second.count(criterion.variable)) {
    throw CriterionError("variable '" + criterion.variable + "' does not occur on line " +
                         std::to_string(criterion.line));
  }
  return close_structure(pdg, dependence_closure(pdg, criterion.line));
}

}  // namespace seqslice::oracle
