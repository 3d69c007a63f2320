#include "seqslice/tsed.hpp"

#include <algorithm>

namespace seqslice::tsed {

namespace {

int flatten(const lang::AstNode& n, std::vector<LabeledTree::Node>& out) {
  int leftmost = -1;
  std::vector<int> kids;
  for (const auto& c : n.children) {
    const int idx = flatten(c, out);
    if (leftmost < 0) leftmost = out[static_cast<std::size_t>(idx)].leftmost;
    kids.push_back(idx);
  }
  const int self = static_cast<int>(out.size());
  out.push_back({n.label, leftmost < 0 ? self : leftmost, -1});
  for (int k : kids) out[static_cast<std::size_t>(k)].parent = self;
  return self;
}

}  // namespace

LabeledTree LabeledTree::from_ast(const lang::AstNode& root) {
  LabeledTree t;
  flatten(root, t.nodes_);
  for (int i = 0; i < t.size(); ++i) {
    const auto& n = t.nodes_[static_cast<std::size_t>(i)];
    if (n.parent < 0 || t.nodes_[static_cast<std::size_t>(n.parent)].leftmost != n.leftmost) {
      t.keyroots_.push_back(i);
    }
  }
  return t;
}

double tree_edit_distance(const LabeledTree& a, const LabeledTree& b, const EditCost& cost) {
  const int n = a.size();
  const int m = b.size();
  if (n == 0) return m * cost.insert;
  if (m == 0) return n * cost.remove;

  // Intern labels so the inner loop compares integers.
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](const LabeledTree& t) {
    std::vector<int> out;
    out.reserve(t.nodes().size());
    for (const auto& node : t.nodes()) {
      out.push_back(ids.emplace(node.label, static_cast<int>(ids.size())).first->second);
    }
    return out;
  };
  const auto la = intern(a);
  const auto lb = intern(b);
  std::vector<int> l1(static_cast<std::size_t>(n)), l2(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) l1[static_cast<std::size_t>(i)] = a.nodes()[static_cast<std::size_t>(i)].leftmost;
  for (int j = 0; j < m; ++j) l2[static_cast<std::size_t>(j)] = b.nodes()[static_cast<std::size_t>(j)].leftmost;

  std::vector<double> td(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), 0.0);
  auto tdat = [&](int i, int j) -> double& {
    return td[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)];
  };
  std::vector<double> fd(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(m + 1));
  const std::size_t stride = static_cast<std::size_t>(m + 1);

  for (int i : a.keyroots()) {
    for (int j : b.keyroots()) {
      const int li = l1[static_cast<std::size_t>(i)];
      const int lj = l2[static_cast<std::size_t>(j)];
      auto f = [&](int x, int y) -> double& {
        return fd[static_cast<std::size_t>(x) * stride + static_cast<std::size_t>(y)];
      };
      f(0, 0) = 0.0;
      for (int di = li; di <= i; ++di) f(di - li + 1, 0) = f(di - li, 0) + cost.remove;
      for (int dj = lj; dj <= j; ++dj) f(0, dj - lj + 1) = f(0, dj - lj) + cost.insert;
      for (int di = li; di <= i; ++di) {
        const int x = di - li + 1;
        const int ldi = l1[static_cast<std::size_t>(di)];
        for (int dj = lj; dj <= j; ++dj) {
          const int y = dj - lj + 1;
          const int ldj = l2[static_cast<std::size_t>(dj)];
          const double del = f(x - 1, y) + cost.remove;
          const double ins = f(x, y - 1) + cost.insert;
          if (ldi == li && ldj == lj) {
            const double ren =
                f(x - 1, y - 1) +
                (la[static_cast<std::size_t>(di)] == lb[static_cast<std::size_t>(dj)] ? 0.0 : cost.relabel);
            f(x, y) = std::min({del, ins, ren});
            tdat(di, dj) = f(x, y);
          } else {
            const double sub = f(ldi - li, ldj - lj) + tdat(di, dj);
            f(x, y) = std::min({del, ins, sub});
          }
        }
      }
    }
  }
  return tdat(n - 1, m - 1);
}

double tsed_score(const LabeledTree& x, const LabeledTree& y, const EditCost& cost) {
  const int denom = std::max(x.size(), y.size());
  if (denom == 0) throw UndefinedInputError("tsed_score is undefined for two empty trees");
  return 1.0 - tree_edit_distance(x, y, cost) / denom;
}

LabeledTree partial_slice_tree(std::string_view partial_slice_text) {
  std::string body;
  for (const auto& row : lang::split_lines(partial_slice_text)) {
    auto tokens = lang::tokenize(row);
    std::size_t start = 0;
    if (!tokens.empty() && tokens[0].kind == lang::TokenKind::int_literal) {
      if (tokens.size() >= 2 && tokens[1].is(":")) {
        start = 2;
      } else if (tokens.size() == 1) {
        start = 1;  // line number emitted, ':' not yet
      }
    }
    if (start >= tokens.size()) continue;
    for (std::size_t i = start; i < tokens.size(); ++i) {
      if (i > start) body += ' ';
      body += tokens[i].text;
    }
    body += '\n';
  }
  if (body.empty()) return {};
  return LabeledTree::from_ast(lang::parse_source(body));
}

double prefix_tsed(std::string_view source_text, std::string_view partial_slice_text) {
  return tsed_score(LabeledTree::from_ast(lang::parse_source(source_text)),
                    partial_slice_tree(partial_slice_text));
}

PrefixTsed::PrefixTsed(std::string_view source_text, EditCost cost)
    : source_(LabeledTree::from_ast(lang::parse_source(source_text))), cost_(cost) {}

double PrefixTsed::score(const std::string& partial_slice_text) {
  auto it = memo_.find(partial_slice_text);
  if (it != memo_.end()) return it->second;
  const double s = tsed_score(source_, partial_slice_tree(partial_slice_text), cost_);
  memo_.emplace(partial_slice_text, s);
  return s;
}

}  // namespace seqslice::tsed
