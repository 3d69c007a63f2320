#pragma once

// Classical backward slicing over a program dependence graph. Used to label
// the corpus and as the reference the learned slicer is scored against.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqslice/error.hpp"
#include "seqslice/minilang.hpp"

namespace seqslice::oracle {

SEQSLICE_DEFINE_ERROR(AnalysisError, true);
SEQSLICE_DEFINE_ERROR(CriterionError, true);

struct SliceCriterion {
  std::string variable;
  int line = 0;

  bool operator==(const SliceCriterion&) const = default;
};

/// Source lines of a compound statement: its header (which carries the
/// opening brace), the closing brace, and the optional else part.
struct BlockLines {
  int header = 0;
  int close = 0;
  int else_header = 0;
  int else_close = 0;
};

using Edge = std::pair<int, int>;

struct Pdg {
  /// Lines holding an executable statement or a control header, ascending.
  std::vector<int> nodes;
  /// (use line, def line): reaching definitions, plus each reference's
  /// edge to its variable's declaration.
  std::vector<Edge> data_edges;
  /// (statement line, innermost enclosing if/while/for header line).
  std::vector<Edge> control_edges;
  /// Keyed by header line.
  std::map<int, BlockLines> blocks;
  /// Identifiers occurring on each node line.
  std::map<int, std::set<std::string>> identifiers;

  bool has_node(int line) const;
};

/// Requires a parse without error nodes, balanced braces, ';' after every
/// simple statement and at most one statement per line; otherwise throws
/// AnalysisError.
Pdg build_pdg(const std::vector<lang::Statement>& program, const lang::AstNode& root);
Pdg build_pdg(std::string_view program_text);

/// Lines reachable from the criterion over data and control edges, never
/// leaving lines <= criterion line.
std::vector<int> dependence_closure(const Pdg& pdg, int line);

/// Adds the closing brace of every included header, and the else header and
/// its closing brace when something inside the else part is included.
std::vector<int> close_structure(const Pdg& pdg, const std::vector<int>& lines);

/// Backward slice (ascending lines, criterion line included).
/// Throws CriterionError when the line is not a statement or the variable
/// does not occur on it.
std::vector<int> backward_slice(const Pdg& pdg, const SliceCriterion& criterion);

}  // namespace seqslice::oracle
