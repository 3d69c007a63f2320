#include "seqslice/metrics.hpp"

#include <algorithm>
#include <set>

#include "seqslice/minilang.hpp"
#include "seqslice/tsed.hpp"

namespace seqslice::metrics {

double exact_match(std::string_view pred_text, std::string_view gold_text) {
  const auto a = lang::tokenize(pred_text);
  const auto b = lang::tokenize(gold_text);
  if (a.size() != b.size()) return 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].text != b[i].text) return 0.0;
  }
  return 1.0;
}

double acc_d(const std::vector<int>& pred_lines, const std::vector<int>& gold_lines) {
  const std::set<int> gold(gold_lines.begin(), gold_lines.end());
  if (gold.empty()) throw UndefinedMetricError("acc_d is undefined for an empty gold slice");
  const std::set<int> pred(pred_lines.begin(), pred_lines.end());
  std::size_t hit = 0;
  for (int l : pred) hit += gold.count(l);
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

double acc_d_cls(const std::vector<int>& pred_lines, const std::vector<int>& gold_lines,
                 const std::vector<int>& candidate_lines) {
  if (candidate_lines.empty()) throw UndefinedMetricError("acc_d_cls needs candidate lines");
  const std::set<int> gold(gold_lines.begin(), gold_lines.end());
  const std::set<int> pred(pred_lines.begin(), pred_lines.end());
  std::size_t right = 0;
  for (int l : candidate_lines) right += gold.count(l) == pred.count(l);
  return static_cast<double>(right) / static_cast<double>(candidate_lines.size());
}

double tsed_metric(std::string_view pred_text, std::string_view gold_text) {
  return tsed::tsed_score(tsed::partial_slice_tree(pred_text), tsed::partial_slice_tree(gold_text));
}

std::vector<int> candidate_lines(const corpus::SliceInstance& instance) {
  std::vector<int> out;
  const auto lines = lang::split_lines(instance.program);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    if (line > instance.criterion.line) break;
    if (lines[i].find_first_not_of(" \t") != std::string::npos) out.push_back(line);
  }
  return out;
}

Scores score_prediction(const corpus::SliceInstance& gold, std::string_view pred_text) {
  const auto pred_lines = corpus::slice_text_lines(pred_text);
  Scores s;
  s.acc_d = acc_d(pred_lines, gold.gold_lines);
  s.exact_match = exact_match(pred_text, gold.gold_text);
  s.tsed = tsed_metric(pred_text, gold.gold_text);
  s.acc_d_cls = acc_d_cls(pred_lines, gold.gold_lines, candidate_lines(gold));
  return s;
}

Scores recompute_means(const std::vector<InstanceRecord>& records) {
  Scores m;
  if (records.empty()) return m;
  for (const auto& r : records) {
    m.acc_d += r.scores.acc_d;
    m.exact_match += r.scores.exact_match;
    m.tsed += r.scores.tsed;
    m.acc_d_cls += r.scores.acc_d_cls;
  }
  const auto n = static_cast<double>(records.size());
  m.acc_d /= n;
  m.exact_match /= n;
  m.tsed /= n;
  m.acc_d_cls /= n;
  return m;
}

}  // namespace seqslice::metrics
