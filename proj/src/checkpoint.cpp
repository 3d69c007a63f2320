#include "seqslice/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace seqslice::model {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'Q', 'S', 'L', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <class T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const tensor::Shape& shape, const double* data, std::size_t n) {
    str(name);
    pod(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) pod(static_cast<std::uint64_t>(d));
    bytes(data, n * sizeof(double));
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> data) : data_(std::move(data)) {}

  void bytes(void* out, std::size_t n) {
    if (n > data_.size() - pos_) throw CheckpointError("checkpoint is truncated");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

json config_json(const ModelConfig& c) {
  return {{"d_model", c.d_model},       {"heads", c.heads},       {"enc_layers", c.enc_layers},
          {"dec_layers", c.dec_layers}, {"ffn_dim", c.ffn_dim},   {"max_src", c.max_src},
          {"max_tgt", c.max_tgt},       {"vocab_size", c.vocab_size},
          {"max_oov_slots", c.max_oov_slots}, {"copy", c.copy},
          {"gate_input", std::string(to_string(c.gate_input))}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.heads = j.at("heads").get<int>();
  c.enc_layers = j.at("enc_layers").get<int>();
  c.dec_layers = j.at("dec_layers").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.max_src = j.at("max_src").get<int>();
  c.max_tgt = j.at("max_tgt").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_oov_slots = j.at("max_oov_slots").get<int>();
  c.copy = j.at("copy").get<bool>();
  c.gate_input = gate_input_from_string(j.at("gate_input").get<std::string>());
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header;
  header["config"] = config_json(ckpt.config);
  header["vocab"] = ckpt.vocab.tokens();
  header["seed"] = ckpt.seed;
  header["no_copy"] = !ckpt.config.copy;
  header["step"] = ckpt.state.step;
  header["epoch"] = ckpt.state.epoch;
  header["best_valid_loss"] = std::isfinite(ckpt.state.best_valid_loss)
                                  ? json(ckpt.state.best_valid_loss)
                                  : json(nullptr);
  const std::string text = header.dump();

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint64_t>(text.size()));
  w.bytes(text.data(), text.size());

  const auto& names = ckpt.params.names();
  const auto& tensors = ckpt.params.tensors();
  const bool with_moments = ckpt.state.first_moments.size() == tensors.size() &&
                            ckpt.state.second_moments.size() == tensors.size();
  w.pod(static_cast<std::uint64_t>(tensors.size() * (with_moments ? 3 : 1)));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.tensor(names[i], tensors[i].shape(), tensors[i].values().data(), tensors[i].size());
  }
  if (with_moments) {
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      w.tensor("opt/m/" + names[i], tensors[i].shape(), ckpt.state.first_moments[i].data(),
               ckpt.state.first_moments[i].size());
      w.tensor("opt/v/" + names[i], tensors[i].shape(), ckpt.state.second_moments[i].data(),
               ckpt.state.second_moments[i].size());
    }
  }

  // Write to a sibling file first so a failed save never clobbers a good one.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw CheckpointError("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint");
  }
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  const auto header_len = r.pod<std::uint64_t>();
  if (header_len > r.remaining()) throw CheckpointError("checkpoint is truncated");
  std::string text(header_len, '\0');
  r.bytes(text.data(), text.size());

  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.config = config_from_json(header.at("config"));
    ckpt.vocab = corpus::Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.state.step = header.at("step").get<std::size_t>();
    ckpt.state.epoch = header.at("epoch").get<std::size_t>();
    if (!header.at("best_valid_loss").is_null()) {
      ckpt.state.best_valid_loss = header.at("best_valid_loss").get<double>();
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  } catch (const corpus::DataError& e) {
    throw CheckpointError(std::string("bad checkpoint vocabulary: ") + e.what());
  }
  try {
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  }
  if (ckpt.config.vocab_size != ckpt.vocab.size()) {
    throw CheckpointError("config vocab_size " + std::to_string(ckpt.config.vocab_size) +
                          " but checkpoint holds " + std::to_string(ckpt.vocab.size()) + " tokens");
  }

  // Expected names and shapes come from a freshly initialised model.
  const ModelParams expected = Model::initialize(ckpt.config, 0).params();
  std::map<std::string, std::vector<double>> payload;
  const auto count = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 4) throw CheckpointError("tensor " + name + " has implausible rank");
    tensor::Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.pod<std::uint64_t>());
      n *= d;
    }
    std::string base = name;
    if (base.rfind("opt/m/", 0) == 0 || base.rfind("opt/v/", 0) == 0) base = base.substr(6);
    if (!expected.contains(base)) throw CheckpointError("unexpected tensor " + name);
    if (expected[base].shape() != shape) {
      throw CheckpointError("tensor " + name + " has shape " + tensor::shape_str(shape) +
                            ", config implies " + tensor::shape_str(expected[base].shape()));
    }
    if (n > r.remaining() / sizeof(double)) throw CheckpointError("checkpoint is truncated");
    std::vector<double> values(n);
    r.bytes(values.data(), n * sizeof(double));
    payload[name] = std::move(values);
  }
  if (!r.done()) throw CheckpointError("trailing bytes after the last tensor");

  const bool has_moments = payload.count("opt/m/" + expected.names().front()) > 0;
  for (const auto& name : expected.names()) {
    auto it = payload.find(name);
    if (it == payload.end()) throw CheckpointError("missing tensor " + name);
    ckpt.params.add(name, tensor::Tensor::from_values(expected[name].shape(), std::move(it->second), true));
    if (has_moments) {
      auto m = payload.find("opt/m/" + name);
      auto v = payload.find("opt/v/" + name);
      if (m == payload.end() || v == payload.end()) {
        throw CheckpointError("incomplete optimizer state for " + name);
      }
      ckpt.state.first_moments.push_back(std::move(m->second));
      ckpt.state.second_moments.push_back(std::move(v->second));
    }
  }
  return ckpt;
}

}  // namespace seqslice::model
