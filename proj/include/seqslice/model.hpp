#pragma once

// Pointer-generator encoder-decoder transformer. The decoder's output
// distribution over the extended vocabulary mixes the vocabulary head with the
// head-averaged final-layer cross-attention, gated by p_gen.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "seqslice/error.hpp"
#include "seqslice/tensor.hpp"

namespace seqslice::model {

SEQSLICE_DEFINE_ERROR(ConfigError, true);
SEQSLICE_DEFINE_ERROR(LengthError, true);
SEQSLICE_DEFINE_ERROR(CapacityError, true);

using tensor::Tensor;

enum class GateInput {
  embedding,  // x_dec is the embedding of the token fed at this step
  hidden,     // x_dec is the final decoder state at this step
};

struct ModelConfig {
  int d_model = 128;
  int heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int ffn_dim = 256;
  int max_src = 256;
  int max_tgt = 256;
  int vocab_size = 0;
  int max_oov_slots = 64;
  /// false pins p_gen to 1: no copy path, the gate parameters stay unused.
  bool copy = true;
  GateInput gate_input = GateInput::embedding;

  int extended_size() const { return vocab_size + max_oov_slots; }
  /// Throws ConfigError.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

std::string_view to_string(GateInput g);
GateInput gate_input_from_string(std::string_view name);

/// Learnable tensors in a fixed order with stable names ("enc.0.attn.wq", ...).
class ModelParams {
 public:
  void add(std::string name, Tensor t);
  Tensor& operator[](const std::string& name);
  const Tensor& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t count() const { return tensors_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t scalar_count() const;
  bool all_finite() const;
  /// Deep copy of the values (no gradients).
  ModelParams clone() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

/// Encoder output for one source sequence.
struct EncoderStates {
  Tensor states;             // [S x d]
  std::vector<int> ext_ids;  // source ids over the extended vocabulary
};

struct DecoderStepOutput {
  std::vector<double> p_extended;  // vocab_size + max_oov_slots
  std::vector<double> alpha;       // over source positions
  double p_gen = 1.0;
  std::vector<double> h_star;      // d_model
};

class Model {
 public:
  Model(ModelConfig config, ModelParams params);
  /// Fresh parameters from `seed`.
  static Model initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  /// `ids` index the embedding (OOV positions hold UNK); `ext_ids` are the
  /// same positions over the extended vocabulary. Records on the active tape.
  EncoderStates encode(std::span<const int> ids, std::span<const int> ext_ids) const;

  /// Teacher-forced distributions for every target position: row t is
  /// P(y_t | y_<t) over the extended vocabulary. `decoder_input` starts with
  /// BOS; extended ids in it are fed as UNK.
  Tensor decode_all(const EncoderStates& enc, std::span<const int> decoder_input,
                    Tensor* alpha_out = nullptr, Tensor* gate_out = nullptr,
                    Tensor* hstar_out = nullptr) const;

  /// Mean cross-entropy of `targets` (extended ids) under teacher forcing.
  Tensor loss(std::span<const int> ids, std::span<const int> ext_ids,
              std::span<const int> targets) const;

  /// Distribution for the token following `prefix` (full recompute).
  DecoderStepOutput decode_step(std::span<const int> prefix, const EncoderStates& enc) const;

 private:
  ModelConfig config_;
  ModelParams params_;

  Tensor attention(const std::string& prefix, const Tensor& query_in, const Tensor& kv_in,
                   bool causal, Tensor* head_mean) const;
  Tensor feed_forward(const std::string& prefix, const Tensor& x) const;
  Tensor norm(const std::string& prefix, const Tensor& x) const;
  void check_source(std::span<const int> ext_ids) const;
};

/// Sinusoidal position table [rows x d].
std::vector<double> positional_table(int rows, int d);

/// Feeds extended ids to the embedding: ids >= vocab_size become UNK.
std::vector<int> embeddable(std::span<const int> ids, int vocab_size);

}  // namespace seqslice::model
