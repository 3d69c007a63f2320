#include "seqslice/model.hpp"

#include <cmath>

#include "seqslice/corpus.hpp"
#include "seqslice/random.hpp"

namespace seqslice::model {

using namespace tensor;

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (d_model <= 0 || heads <= 0 || d_model % heads != 0) fail("d_model must be a positive multiple of heads");
  if (enc_layers < 1 || dec_layers < 1) fail("needs at least one encoder and one decoder layer");
  if (ffn_dim <= 0) fail("ffn_dim must be positive");
  if (max_src <= 0 || max_tgt <= 0) fail("length limits must be positive");
  if (vocab_size <= corpus::kReservedCount) fail("vocab_size must exceed the reserved ids");
  if (max_oov_slots < 0) fail("max_oov_slots must be non-negative");
}

std::string_view to_string(GateInput g) {
  return g == GateInput::embedding ? "embedding" : "hidden";
}

GateInput gate_input_from_string(std::string_view name) {
  if (name == "embedding") return GateInput::embedding;
  if (name == "hidden") return GateInput::hidden;
  throw ConfigError("unknown gate input '" + std::string(name) + "' (embedding or hidden)");
}

// ---- parameters -------------------------------------------------------------

void ModelParams::add(std::string name, Tensor t) {
  if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
  index_.emplace(name, tensors_.size());
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(t));
}

Tensor& ModelParams::operator[](const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("no parameter named " + name);
  return tensors_[it->second];
}

const Tensor& ModelParams::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("no parameter named " + name);
  return tensors_[it->second];
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors_)
    if (!t.all_finite()) return false;
  return true;
}

ModelParams ModelParams::clone() const {
  ModelParams out;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto v = tensors_[i].values();
    out.add(names_[i], Tensor::from_values(tensors_[i].shape(), {v.begin(), v.end()},
                                           tensors_[i].requires_grad()));
  }
  return out;
}

// ---- construction -----------------------------------------------------------

namespace {

Tensor normal(Rng& rng, Shape shape, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return Tensor::from_values(std::move(shape), std::move(v), true);
}

Tensor glorot(Rng& rng, std::size_t in, std::size_t out) {
  return normal(rng, {in, out}, std::sqrt(2.0 / static_cast<double>(in + out)));
}

void add_norm(ModelParams& p, const std::string& name, std::size_t d) {
  p.add(name + ".g", Tensor::filled({d}, 1.0, true));
  p.add(name + ".b", Tensor::zeros({d}, true));
}

void add_attention(ModelParams& p, Rng& rng, const std::string& name, std::size_t d) {
  for (const char* w : {"q", "k", "v", "o"}) {
    p.add(name + ".w" + w, glorot(rng, d, d));
    p.add(name + ".b" + w, Tensor::zeros({d}, true));
  }
}

void add_ffn(ModelParams& p, Rng& rng, const std::string& name, std::size_t d, std::size_t f) {
  p.add(name + ".w1", glorot(rng, d, f));
  p.add(name + ".b1", Tensor::zeros({f}, true));
  p.add(name + ".w2", glorot(rng, f, d));
  p.add(name + ".b2", Tensor::zeros({d}, true));
}

}  // namespace

Model::Model(ModelConfig config, ModelParams params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
}

Model Model::initialize(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = substream(seed, "init");
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto f = static_cast<std::size_t>(cfg.ffn_dim);
  const auto v = static_cast<std::size_t>(cfg.vocab_size);
  ModelParams p;
  p.add("tok_emb", normal(rng, {v, d}, 1.0));
  for (int l = 0; l < cfg.enc_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    add_norm(p, pre + ".ln1", d);
    add_attention(p, rng, pre + ".attn", d);
    add_norm(p, pre + ".ln2", d);
    add_ffn(p, rng, pre + ".ffn", d, f);
  }
  add_norm(p, "enc.ln_f", d);
  for (int l = 0; l < cfg.dec_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    add_norm(p, pre + ".ln1", d);
    add_attention(p, rng, pre + ".self", d);
    add_norm(p, pre + ".ln2", d);
    add_attention(p, rng, pre + ".cross", d);
    add_norm(p, pre + ".ln3", d);
    add_ffn(p, rng, pre + ".ffn", d, f);
  }
  add_norm(p, "dec.ln_f", d);
  p.add("out.w", normal(rng, {d, v}, 0.02));
  p.add("out.b", Tensor::zeros({v}, true));
  p.add("gen.w", normal(rng, {2 * d, 1}, 0.02));
  p.add("gen.b", Tensor::zeros({1}, true));
  return Model(cfg, std::move(p));
}

std::vector<double> positional_table(int rows, int d) {
  std::vector<double> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(d));
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < d; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / d);
      out[static_cast<std::size_t>(pos * d + i)] = std::sin(angle);
      if (i + 1 < d) out[static_cast<std::size_t>(pos * d + i + 1)] = std::cos(angle);
    }
  }
  return out;
}

std::vector<int> embeddable(std::span<const int> ids, int vocab_size) {
  std::vector<int> out(ids.begin(), ids.end());
  for (auto& id : out)
    if (id >= vocab_size) id = corpus::kUnk;
  return out;
}

// ---- forward ------------------------------------------------------------------

Tensor Model::norm(const std::string& prefix, const Tensor& x) const {
  return layer_norm(x, params_[prefix + ".g"], params_[prefix + ".b"]);
}

Tensor Model::feed_forward(const std::string& prefix, const Tensor& x) const {
  Tensor h = relu(add_bias(matmul(x, params_[prefix + ".w1"]), params_[prefix + ".b1"]));
  return add_bias(matmul(h, params_[prefix + ".w2"]), params_[prefix + ".b2"]);
}

Tensor Model::attention(const std::string& prefix, const Tensor& query_in, const Tensor& kv_in,
                        bool causal, Tensor* head_mean) const {
  const auto& p = params_;
  Tensor q = add_bias(matmul(query_in, p[prefix + ".wq"]), p[prefix + ".bq"]);
  Tensor k = add_bias(matmul(kv_in, p[prefix + ".wk"]), p[prefix + ".bk"]);
  Tensor v = add_bias(matmul(kv_in, p[prefix + ".wv"]), p[prefix + ".bv"]);
  const auto heads = static_cast<std::size_t>(config_.heads);
  const std::size_t dh = static_cast<std::size_t>(config_.d_model) / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t t = query_in.rows();
  const std::size_t s = kv_in.rows();

  Tensor mask;
  if (causal) {
    std::vector<double> m(t * s, 0.0);
    for (std::size_t r = 0; r < t; ++r)
      for (std::size_t c = r + 1; c < s; ++c) m[r * s + c] = kMaskValue;
    mask = Tensor::from_values({t, s}, std::move(m));
  }

  std::vector<Tensor> ctx;
  Tensor weight_sum;
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor scores = scale(matmul_bt(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh)), inv);
    if (causal) scores = add(scores, mask);
    Tensor a = softmax(scores, 1);
    ctx.push_back(matmul(a, slice_cols(v, h * dh, dh)));
    if (head_mean) weight_sum = weight_sum.defined() ? add(weight_sum, a) : a;
  }
  if (head_mean) *head_mean = scale(weight_sum, 1.0 / static_cast<double>(heads));
  return add_bias(matmul(concat_cols(ctx), p[prefix + ".wo"]), p[prefix + ".bo"]);
}

void Model::check_source(std::span<const int> ext_ids) const {
  if (ext_ids.empty()) throw LengthError("empty source sequence");
  if (static_cast<int>(ext_ids.size()) > config_.max_src) {
    throw LengthError("source length " + std::to_string(ext_ids.size()) + " exceeds max_src " +
                      std::to_string(config_.max_src));
  }
  for (int id : ext_ids) {
    if (id < 0 || id >= config_.extended_size()) {
      throw CapacityError("source id " + std::to_string(id) + " needs more than " +
                          std::to_string(config_.max_oov_slots) + " oov slots");
    }
  }
}

EncoderStates Model::encode(std::span<const int> ids, std::span<const int> ext_ids) const {
  check_source(ext_ids);
  if (ids.size() != ext_ids.size()) throw LengthError("ids and ext_ids differ in length");
  const auto s = ids.size();
  const auto d = static_cast<std::size_t>(config_.d_model);
  const auto in_vocab = embeddable(ids, config_.vocab_size);
  Tensor x = add(embedding(params_["tok_emb"], in_vocab),
                 Tensor::from_values({s, d}, positional_table(static_cast<int>(s), config_.d_model)));
  for (int l = 0; l < config_.enc_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    Tensor h = norm(pre + ".ln1", x);
    x = add(x, attention(pre + ".attn", h, h, false, nullptr));
    x = add(x, feed_forward(pre + ".ffn", norm(pre + ".ln2", x)));
  }
  return {norm("enc.ln_f", x), {ext_ids.begin(), ext_ids.end()}};
}

Tensor Model::decode_all(const EncoderStates& enc, std::span<const int> decoder_input,
                         Tensor* alpha_out, Tensor* gate_out, Tensor* hstar_out) const {
  const auto t = decoder_input.size();
  if (t == 0) throw LengthError("decoder input must start with BOS");
  if (static_cast<int>(t) > config_.max_tgt) {
    throw LengthError("target length " + std::to_string(t) + " exceeds max_tgt " +
                      std::to_string(config_.max_tgt));
  }
  const auto d = static_cast<std::size_t>(config_.d_model);
  const auto in_vocab = embeddable(decoder_input, config_.vocab_size);
  Tensor emb = embedding(params_["tok_emb"], in_vocab);
  Tensor y = add(emb, Tensor::from_values({t, d}, positional_table(static_cast<int>(t), config_.d_model)));
  Tensor alpha;
  for (int l = 0; l < config_.dec_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    const bool last = l + 1 == config_.dec_layers;
    Tensor h = norm(pre + ".ln1", y);
    y = add(y, attention(pre + ".self", h, h, true, nullptr));
    y = add(y, attention(pre + ".cross", norm(pre + ".ln2", y), enc.states, false,
                         last ? &alpha : nullptr));
    y = add(y, feed_forward(pre + ".ffn", norm(pre + ".ln3", y)));
  }
  Tensor dec = norm("dec.ln_f", y);
  Tensor p_vocab = softmax(add_bias(matmul(dec, params_["out.w"]), params_["out.b"]), 1);
  const auto slots = static_cast<std::size_t>(config_.max_oov_slots);
  Tensor p_padded = slots == 0 ? p_vocab
                               : concat_cols(std::vector<Tensor>{p_vocab, Tensor::zeros({t, slots})});
  if (alpha_out) *alpha_out = alpha;
  Tensor h_star = matmul(alpha, enc.states);
  if (hstar_out) *hstar_out = h_star;
  if (!config_.copy) {
    if (gate_out) *gate_out = Tensor::filled({t, 1}, 1.0);
    return p_padded;
  }
  const Tensor& x_dec = config_.gate_input == GateInput::embedding ? emb : dec;
  Tensor gate = sigmoid(add_bias(matmul(concat_cols(std::vector<Tensor>{h_star, x_dec}),
                                        params_["gen.w"]),
                                 params_["gen.b"]));
  if (gate_out) *gate_out = gate;
  return scatter_add_rows(mul_rows(p_padded, gate), enc.ext_ids, mul_rows(alpha, one_minus(gate)));
}

Tensor Model::loss(std::span<const int> ids, std::span<const int> ext_ids,
                   std::span<const int> targets) const {
  if (targets.empty()) throw LengthError("empty target sequence");
  EncoderStates enc = encode(ids, ext_ids);
  std::vector<int> input{corpus::kBos};
  input.insert(input.end(), targets.begin(), targets.end() - 1);
  return cross_entropy(decode_all(enc, input), targets);
}

DecoderStepOutput Model::decode_step(std::span<const int> prefix, const EncoderStates& enc) const {
  Tensor alpha, gate, h_star;
  Tensor p = decode_all(enc, prefix, &alpha, &gate, &h_star);
  const std::size_t last = prefix.size() - 1;
  DecoderStepOutput out;
  const auto pv = p.values();
  const std::size_t n = p.cols();
  out.p_extended.assign(pv.begin() + static_cast<std::ptrdiff_t>(last * n),
                        pv.begin() + static_cast<std::ptrdiff_t>((last + 1) * n));
  const auto av = alpha.values();
  const std::size_t s = alpha.cols();
  out.alpha.assign(av.begin() + static_cast<std::ptrdiff_t>(last * s),
                   av.begin() + static_cast<std::ptrdiff_t>((last + 1) * s));
  out.p_gen = gate.values()[last];
  const auto hv = h_star.values();
  const std::size_t d = h_star.cols();
  out.h_star.assign(hv.begin() + static_cast<std::ptrdiff_t>(last * d),
                    hv.begin() + static_cast<std::ptrdiff_t>((last + 1) * d));
  return out;
}

}  // namespace seqslice::model
