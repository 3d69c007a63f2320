#pragma once

// Slice metrics and the evaluation harness (constraint/copy ablations,
// corruption sweeps).

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seqslice/corpus.hpp"
#include "seqslice/decode.hpp"
#include "seqslice/error.hpp"
#include "seqslice/model.hpp"

namespace seqslice::metrics {

SEQSLICE_DEFINE_ERROR(UndefinedMetricError, false);

/// 1 when both texts lex to the same token sequence (line prefixes included).
double exact_match(std::string_view pred_text, std::string_view gold_text);

/// |pred ∩ gold| / |gold|. Extra predicted lines are not penalized.
double acc_d(const std::vector<int>& pred_lines, const std::vector<int>& gold_lines);

/// Per-line classification accuracy over `candidate_lines` (in slice or not).
double acc_d_cls(const std::vector<int>& pred_lines, const std::vector<int>& gold_lines,
                 const std::vector<int>& candidate_lines);

/// tsed_score of the two slices' trees, line prefixes dropped. 0 for an
/// empty prediction.
double tsed_metric(std::string_view pred_text, std::string_view gold_text);

/// Non-blank program lines up to the criterion line.
std::vector<int> candidate_lines(const corpus::SliceInstance& instance);

struct Scores {
  double acc_d = 0.0;
  double exact_match = 0.0;
  double tsed = 0.0;
  double acc_d_cls = 0.0;
};

struct InstanceRecord {
  std::size_t index = 0;
  std::vector<int> pred_lines;
  std::vector<int> gold_lines;
  std::string pred_text;
  std::string gold_text;
  Scores scores;
  bool finished = false;
  /// Emitted tokens outside the input and the permitted specials.
  std::size_t unsound_tokens = 0;
  std::size_t emitted_tokens = 0;
  /// Non-empty when decoding this instance failed; its scores are then 0.
  std::string error;
};

/// What was run: model variant, constraints and input corruption.
struct EvalSetting {
  std::string name = "full";
  bool copy = true;
  bool lexical = true;
  bool syntactic = true;
  corpus::Corruption corruption = corpus::Corruption::none;
};

struct EvalReport {
  EvalSetting setting;
  decode::BeamConfig beam;
  std::vector<InstanceRecord> records;
  Scores means;
  std::size_t failures = 0;
  std::size_t unsound_tokens = 0;
  std::size_t emitted_tokens = 0;
};

Scores score_prediction(const corpus::SliceInstance& gold, std::string_view pred_text);

/// Decodes every instance with `model` (whose copy flag must match the
/// setting) under the setting's constraint toggles. `jobs` = 0 uses every
/// core.
EvalReport evaluate(const model::Model& model, const corpus::Vocabulary& vocab,
                    const std::vector<corpus::SliceInstance>& instances,
                    const EvalSetting& setting, const decode::BeamConfig& beam, int jobs = 0);

/// Means recomputed from the records.
Scores recompute_means(const std::vector<InstanceRecord>& records);

/// Rows of the ablation: `grid` false gives full, -copy, -lexical,
/// -syntactic; true gives all eight copy x lexical x syntactic settings.
std::vector<EvalSetting> ablation_settings(bool grid);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
/// One row per report: Setting, Acc-D, ExactMatch, TSED, Acc-D(cls), n.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace seqslice::metrics
