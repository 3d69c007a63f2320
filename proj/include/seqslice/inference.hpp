#pragma once

// Key/value-cached decoding: one token per call, no tape. Produces the same
// distributions as Model::decode_step up to floating-point reassociation.

#include <memory>
#include <span>
#include <vector>

#include "seqslice/model.hpp"

namespace seqslice::model {

class IncrementalDecoder {
 public:
  /// Encodes the source once (no tape) and precomputes cross-attention keys
  /// and values. Copies share that work and only duplicate the self-attention
  /// cache, so a beam can branch by copying.
  IncrementalDecoder(const Model& model, std::span<const int> ids, std::span<const int> ext_ids);

  /// Feeds the next decoder input token (BOS first) and returns the
  /// distribution of the token after it.
  DecoderStepOutput step(int token);
  std::size_t length() const { return length_; }

 private:
  struct Shared;
  std::shared_ptr<const Shared> shared_;
  std::vector<std::vector<double>> self_k_;
  std::vector<std::vector<double>> self_v_;
  std::size_t length_ = 0;
};

}  // namespace seqslice::model
