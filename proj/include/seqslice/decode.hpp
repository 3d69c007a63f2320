#pragma once

// Beam search with a lexical mask (only tokens of the input may be emitted)
// and a syntactic filter (a candidate whose prefix TSED against the source
// falls below its parent's is dropped).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqslice/corpus.hpp"
#include "seqslice/error.hpp"
#include "seqslice/model.hpp"

namespace seqslice::decode {

SEQSLICE_DEFINE_ERROR(DegenerateMaskError, false);
SEQSLICE_DEFINE_ERROR(DecodeError, false);

/// Decoding state for one source; cloning branches a hypothesis.
class DecoderState {
 public:
  virtual ~DecoderState() = default;
  virtual std::unique_ptr<DecoderState> clone() const = 0;
  /// Feeds the next decoder input token (BOS first) and returns scores for
  /// the following token over the extended vocabulary. Scores are treated as
  /// logits: they are masked, then log-softmaxed.
  virtual std::vector<double> step(int token) = 0;
};

class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual std::unique_ptr<DecoderState> start(const corpus::EncodedInput& input) const = 0;
};

/// Adapter over the transformer: scores are log P(y) of the copy mixture.
class TransformerStepModel : public StepModel {
 public:
  explicit TransformerStepModel(const model::Model& model) : model_(&model) {}
  std::unique_ptr<DecoderState> start(const corpus::EncodedInput& input) const override;

 private:
  const model::Model* model_;
};

/// Boolean mask over the extended vocabulary.
using AllowedSet = std::vector<bool>;

/// True for every id in `ext_ids` plus EOS, <slice>, </slice> and <nl>.
AllowedSet allowed_tokens(const std::vector<int>& ext_ids, int extended_size);

/// Disallowed positions become kMaskValue. Throws DegenerateMaskError when
/// nothing is allowed.
std::vector<double> apply_mask(std::vector<double> logits, const AllowedSet& allowed);

enum class Granularity { statement, token };

struct BeamConfig {
  int beam_size = 3;
  int max_len = 256;
  bool lexical_on = true;
  bool syntactic_on = true;
  Granularity granularity = Granularity::statement;
  double tau = 1e-9;
  /// Final ranking by s / |y|; false ranks by s as written.
  bool length_normalize = true;
  bool record_trace = false;
};

/// One candidate considered at a step.
struct TraceEntry {
  std::vector<int> tokens;  // the candidate sequence y'
  double score = 0.0;       // cumulative log-prob (of the unmasked score for lexical_masked)
  double t_prev = 0.0;      // accepted TSED carried by the candidate
  std::string action;       // accept | dismiss | terminate
  std::string reason;       // "" | lexical_masked | tsed_drop | eos | pruned
};

struct TraceStep {
  int step = 0;
  std::vector<TraceEntry> beams;
};

using Trace = std::vector<TraceStep>;

/// Trace JSON; tokens are spelled through `vocab`/`oov`.
nlohmann::json trace_to_json(const Trace& trace, const corpus::Vocabulary& vocab,
                             const std::vector<std::string>& oov);

struct DecodeInput {
  corpus::EncodedInput encoded;
  std::string source_text;  // program the partial slices are compared to
};

struct BeamResult {
  std::vector<int> tokens;  // generated extended ids, EOS included when finished
  double score = 0.0;       // cumulative log-prob
  bool finished = false;
  std::string slice_text;
  Trace trace;
};

BeamResult beam_search(const StepModel& model, const DecodeInput& input,
                       const corpus::Vocabulary& vocab, const BeamConfig& config);

/// Encodes an instance and decodes it with the transformer.
BeamResult slice_instance(const model::Model& model, const corpus::Vocabulary& vocab,
                          const corpus::SliceInstance& instance, const BeamConfig& config);

}  // namespace seqslice::decode
