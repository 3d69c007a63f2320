#include <algorithm>
#include <unordered_set>

#include "seqslice/corpus.hpp"
#include "seqslice/minilang.hpp"
#include "seqslice/random.hpp"

namespace seqslice::corpus {

std::string_view to_string(Corruption kind) {
  switch (kind) {
    case Corruption::none: return "none";
    case Corruption::missing_class: return "missing_class";
    case Corruption::missing_semicolons: return "missing_semicolons";
    case Corruption::unmatched_braces: return "unmatched_braces";
  }
  return "none";
}

Corruption corruption_from_string(std::string_view name) {
  for (auto k : {Corruption::none, Corruption::missing_class, Corruption::missing_semicolons,
                 Corruption::unmatched_braces}) {
    if (to_string(k) == name) return k;
  }
  throw ArgumentError("unknown corruption kind '" + std::string(name) +
                      "' (expected none, missing_class, missing_semicolons or unmatched_braces)");
}

std::string render_lines(std::string_view program, const std::vector<int>& lines) {
  const auto statements = lang::split_statements(lang::tokenize(program));
  std::vector<lang::Statement> picked;
  for (const auto& s : statements) {
    if (std::binary_search(lines.begin(), lines.end(), s.line)) picked.push_back(s);
  }
  return lang::render_slice(picked);
}

SliceInstance make_instance(const std::string& program, const oracle::SliceCriterion& criterion) {
  SliceInstance inst;
  inst.program = program;
  inst.criterion = criterion;
  inst.gold_lines = oracle::backward_slice(oracle::build_pdg(program), criterion);
  inst.gold_text = render_lines(program, inst.gold_lines);
  return inst;
}

SliceInstance make_instance(const std::string& program, std::uint64_t seed) {
  const oracle::Pdg pdg = oracle::build_pdg(program);
  std::vector<oracle::SliceCriterion> occurrences;
  for (const auto& [line, names] : pdg.identifiers) {
    for (const auto& name : names) occurrences.push_back({name, line});
  }
  if (occurrences.empty()) {
    throw GenerationError("program has no variable occurrence to slice on");
  }
  Rng rng(seed);
  const auto& crit = occurrences[uniform_index(rng, occurrences.size())];
  SliceInstance inst;
  inst.program = program;
  inst.criterion = crit;
  inst.gold_lines = oracle::backward_slice(pdg, crit);
  inst.gold_text = render_lines(program, inst.gold_lines);
  return inst;
}

SliceInstance corrupt(const SliceInstance& instance, Corruption kind, std::uint64_t seed) {
  if (instance.corruption != Corruption::none) {
    throw ArgumentError("instance is already corrupted (" +
                        std::string(to_string(instance.corruption)) + ")");
  }
  if (kind == Corruption::none) throw ArgumentError("corrupt needs a corruption kind, got none");

  // One entry per source line, blank lines included, so numbering survives.
  std::vector<lang::Statement> statements(lang::split_lines(instance.program).size());
  for (std::size_t i = 0; i < statements.size(); ++i) statements[i].line = static_cast<int>(i) + 1;
  for (auto& s : lang::split_statements(lang::tokenize(instance.program))) {
    statements[static_cast<std::size_t>(s.line) - 1] = std::move(s);
  }
  std::vector<bool> drop(statements.size(), false);

  switch (kind) {
    case Corruption::missing_class: {
      // Remove every class/method header and as many trailing '}' lines.
      std::size_t headers = 0;
      for (std::size_t i = 0; i < statements.size(); ++i) {
        const auto k = statements[i].kind;
        if (k == lang::StatementKind::method_header || k == lang::StatementKind::class_header) {
          drop[i] = true;
          ++headers;
        }
      }
      for (std::size_t i = statements.size(); i-- > 0 && headers > 0;) {
        if (statements[i].kind == lang::StatementKind::close_brace) {
          drop[i] = true;
          --headers;
        }
      }
      break;
    }
    case Corruption::missing_semicolons:
      for (auto& s : statements) {
        if (!s.tokens.empty() && s.tokens.back().is(";")) s.tokens.pop_back();
      }
      break;
    case Corruption::unmatched_braces: {
      std::vector<std::size_t> braces;
      for (std::size_t i = 0; i < statements.size(); ++i) {
        if (statements[i].kind == lang::StatementKind::close_brace &&
            statements[i].tokens.size() == 1) {
          braces.push_back(i);
        }
      }
      if (braces.empty()) throw ArgumentError("program has no '}' line to remove");
      Rng rng(seed);
      drop[braces[uniform_index(rng, braces.size())]] = true;
      break;
    }
    case Corruption::none:
      break;
  }

  // Renumber the surviving statements densely from 1.
  std::vector<std::pair<int, int>> renumber;
  std::string program;
  int next = 0;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    if (drop[i]) continue;
    renumber.emplace_back(statements[i].line, ++next);
    if (!statements[i].tokens.empty()) program += statements[i].text();
    program += '\n';
  }
  auto mapped = [&](int old_line) {
    for (const auto& [from, to] : renumber)
      if (from == old_line) return to;
    return 0;
  };

  SliceInstance out;
  out.program = std::move(program);
  out.corruption = kind;
  out.criterion = {instance.criterion.variable, mapped(instance.criterion.line)};
  if (out.criterion.line == 0) {
    throw ArgumentError("corruption removed the criterion line");
  }
  for (int l : instance.gold_lines) {
    if (const int m = mapped(l)) out.gold_lines.push_back(m);
  }
  out.gold_text = render_lines(out.program, out.gold_lines);
  return out;
}

DatasetSplit generate_split(std::uint64_t seed, const SplitSizes& sizes, const GenConfig& config) {
  DatasetSplit split;
  const std::size_t total = sizes.train + sizes.valid + sizes.test;
  std::unordered_set<std::string> seen;
  for (std::uint64_t i = 0; seen.size() < total; ++i) {
    const std::uint64_t program_seed = substream_seed(seed, "gen", i);
    std::string program = generate_program(program_seed, config);
    if (!seen.insert(program).second) continue;
    SliceInstance inst = make_instance(program, mix64(program_seed));
    const std::size_t k = seen.size() - 1;
    if (k < sizes.train) {
      split.train.push_back(std::move(inst));
    } else if (k < sizes.train + sizes.valid) {
      split.valid.push_back(std::move(inst));
    } else {
      split.test.push_back(std::move(inst));
    }
  }
  return split;
}

}  // namespace seqslice::corpus
