#pragma once

// Zhang-Shasha tree edit distance over syntax trees, the normalized
// similarity 1 - TED / max(|x|, |y|), and its prefix variant used while
// decoding.

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqslice/error.hpp"
#include "seqslice/minilang.hpp"

namespace seqslice::tsed {

SEQSLICE_DEFINE_ERROR(UndefinedInputError, true);

struct EditCost {
  double insert = 1.0;
  double remove = 1.0;
  double relabel = 1.0;
};

/// Ordered labeled tree flattened in postorder.
class LabeledTree {
 public:
  struct Node {
    std::string label;
    int leftmost = 0;  // postorder index of the leftmost leaf descendant
    int parent = -1;
  };

  LabeledTree() = default;
  static LabeledTree from_ast(const lang::AstNode& root);

  int size() const { return static_cast<int>(nodes_.size()); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Ascending; the root (last index) is always one.
  const std::vector<int>& keyroots() const { return keyroots_; }

 private:
  std::vector<Node> nodes_;
  std::vector<int> keyroots_;
};

double tree_edit_distance(const LabeledTree& a, const LabeledTree& b, const EditCost& cost = {});

/// Throws UndefinedInputError when both trees are empty.
double tsed_score(const LabeledTree& x, const LabeledTree& y, const EditCost& cost = {});

/// Tree of a partial slice: line-number prefixes are dropped (including a
/// trailing number still waiting for its ':'), rows are reparsed tolerantly
/// on consecutive lines. Rows are separated by '\n'.
LabeledTree partial_slice_tree(std::string_view partial_slice_text);

/// Similarity of a partial slice to a source program.
double prefix_tsed(std::string_view source_text, std::string_view partial_slice_text);

/// prefix_tsed against one fixed source with a memo table. Not thread-safe:
/// use one per worker.
class PrefixTsed {
 public:
  explicit PrefixTsed(std::string_view source_text, EditCost cost = {});

  double score(const std::string& partial_slice_text);
  const LabeledTree& source_tree() const { return source_; }
  std::size_t cache_size() const { return memo_.size(); }

 private:
  LabeledTree source_;
  EditCost cost_;
  std::unordered_map<std::string, double> memo_;
};

}  // namespace seqslice::tsed
