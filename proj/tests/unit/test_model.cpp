#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "oracles.hpp"
#include "seqslice/checkpoint.hpp"
#include "seqslice/inference.hpp"
#include "seqslice/train.hpp"

using namespace seqslice;
using namespace seqslice::model;
namespace fs = std::filesystem;

namespace {

ModelConfig toy_config(int vocab = 20) {
  ModelConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.enc_layers = 2;
  c.dec_layers = 2;
  c.ffn_dim = 16;
  c.max_src = 32;
  c.max_tgt = 32;
  c.vocab_size = vocab;
  c.max_oov_slots = 4;
  return c;
}

// A source over the extended vocabulary with a couple of OOV positions.
struct Source {
  std::vector<int> ids, ext_ids;
};

Source random_source(Rng& rng, const ModelConfig& c, std::size_t len) {
  Source s;
  for (std::size_t i = 0; i < len; ++i) {
    s.ext_ids.push_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(c.vocab_size + 2))));
  }
  s.ids = embeddable(s.ext_ids, c.vocab_size);
  return s;
}

std::vector<int> random_prefix(Rng& rng, const ModelConfig& c, std::size_t len) {
  std::vector<int> p{corpus::kBos};
  for (std::size_t i = 1; i < len; ++i)
    p.push_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(c.extended_size()))));
  return p;
}

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "seqslice_test_model";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = toy_config();
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = toy_config();
  c.vocab_size = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(gate_input_from_string("hidden") == GateInput::hidden);
  CHECK_THROWS_AS(gate_input_from_string("both"), ConfigError);
}

TEST_CASE("extended distributions are normalized and gates stay in range") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    ModelConfig c = toy_config(14 + static_cast<int>(uniform_index(rng, 20)));
    c.gate_input = trial % 2 ? GateInput::hidden : GateInput::embedding;
    const Model m = Model::initialize(c, static_cast<std::uint64_t>(trial));
    const Source src = random_source(rng, c, 1 + uniform_index(rng, 20));
    const auto enc = m.encode(src.ids, src.ext_ids);
    const auto out = m.decode_step(random_prefix(rng, c, 1 + uniform_index(rng, 10)), enc);
    REQUIRE(out.p_extended.size() == static_cast<std::size_t>(c.extended_size()));
    CHECK(std::abs(total(out.p_extended) - 1.0) < 1e-6);
    CHECK(std::abs(total(out.alpha) - 1.0) < 1e-9);
    CHECK(out.p_gen >= 0.0);
    CHECK(out.p_gen <= 1.0);
    CHECK(out.h_star.size() == static_cast<std::size_t>(c.d_model));
  }
}

TEST_CASE("encoder output shape and determinism") {
  const ModelConfig c = toy_config();
  const Model m = Model::initialize(c, 3);
  Rng rng(4);
  const Source src = random_source(rng, c, 9);
  const auto a = m.encode(src.ids, src.ext_ids);
  const auto b = m.encode(src.ids, src.ext_ids);
  CHECK(a.states.shape() == tensor::Shape{9, 8});
  CHECK(std::equal(a.states.values().begin(), a.states.values().end(), b.states.values().begin()));
  const Model same = Model::initialize(c, 3);
  const auto c2 = same.encode(src.ids, src.ext_ids);
  CHECK(std::equal(a.states.values().begin(), a.states.values().end(), c2.states.values().begin()));
}

TEST_CASE("a saturated gate reduces the mixture to one of its parts") {
  ModelConfig c = toy_config();
  Rng rng(8);
  const Source src = random_source(rng, c, 12);
  const auto prefix = random_prefix(rng, c, 5);

  Model copy_model = Model::initialize(c, 5);
  ModelConfig plain_cfg = c;
  plain_cfg.copy = false;
  const Model plain(plain_cfg, copy_model.params().clone());

  copy_model.params()["gen.b"].mutable_values()[0] = 1e3;
  const auto forced = copy_model.decode_step(prefix, copy_model.encode(src.ids, src.ext_ids));
  const auto vocab_only = plain.decode_step(prefix, plain.encode(src.ids, src.ext_ids));
  CHECK(forced.p_gen == 1.0);
  CHECK(vocab_only.p_gen == 1.0);
  for (std::size_t i = 0; i < forced.p_extended.size(); ++i) {
    CHECK(forced.p_extended[i] == doctest::Approx(vocab_only.p_extended[i]).epsilon(1e-12));
    if (i >= static_cast<std::size_t>(c.vocab_size)) CHECK(vocab_only.p_extended[i] == 0.0);
  }

  copy_model.params()["gen.b"].mutable_values()[0] = -1e3;
  const auto copied = copy_model.decode_step(prefix, copy_model.encode(src.ids, src.ext_ids));
  CHECK(copied.p_gen == 0.0);
  std::vector<bool> in_source(static_cast<std::size_t>(c.extended_size()), false);
  for (int id : src.ext_ids) in_source[static_cast<std::size_t>(id)] = true;
  for (std::size_t i = 0; i < copied.p_extended.size(); ++i) {
    if (!in_source[i]) CHECK(copied.p_extended[i] == 0.0);
  }
  CHECK(std::abs(total(copied.p_extended) - 1.0) < 1e-9);
}

TEST_CASE("an OOV id gets probability only through attention on its source positions") {
  const ModelConfig c = toy_config();
  const Model m = Model::initialize(c, 9);
  std::vector<int> ext{14, c.vocab_size, 15, c.vocab_size + 1, c.vocab_size};
  const auto ids = embeddable(ext, c.vocab_size);
  const auto out = m.decode_step(std::vector<int>{corpus::kBos, 14}, m.encode(ids, ext));
  const double oov0 = (1.0 - out.p_gen) * (out.alpha[1] + out.alpha[4]);
  CHECK(out.p_extended[static_cast<std::size_t>(c.vocab_size)] == doctest::Approx(oov0).epsilon(1e-12));
  CHECK(out.p_extended[static_cast<std::size_t>(c.vocab_size + 2)] == 0.0);
  CHECK(out.p_extended[static_cast<std::size_t>(c.vocab_size + 3)] == 0.0);
}

TEST_CASE("length and capacity errors") {
  const ModelConfig c = toy_config();
  const Model m = Model::initialize(c, 1);
  const std::vector<int> empty;
  CHECK_THROWS_AS(m.encode(empty, empty), LengthError);
  const std::vector<int> too_long(40, 14);
  CHECK_THROWS_AS(m.encode(too_long, too_long), LengthError);
  const std::vector<int> beyond{14, c.extended_size()};
  const std::vector<int> beyond_ids{14, corpus::kUnk};
  CHECK_THROWS_AS(m.encode(beyond_ids, beyond), CapacityError);
  const auto enc = m.encode(std::vector<int>{14, 15}, std::vector<int>{14, 15});
  CHECK_THROWS_AS(m.decode_step(std::vector<int>{}, enc), LengthError);
}

TEST_CASE("cached decoding matches full recomputation") {
  Rng rng(12);
  for (int trial = 0; trial < 8; ++trial) {
    ModelConfig c = toy_config();
    c.d_model = 16;
    c.heads = 4;
    c.gate_input = trial % 2 ? GateInput::hidden : GateInput::embedding;
    c.copy = trial % 3 != 2;
    const Model m = Model::initialize(c, static_cast<std::uint64_t>(100 + trial));
    const Source src = random_source(rng, c, 6 + uniform_index(rng, 10));
    const auto enc = m.encode(src.ids, src.ext_ids);
    const auto prefix = random_prefix(rng, c, 8);
    IncrementalDecoder inc(m, src.ids, src.ext_ids);
    const Tensor rows = m.decode_all(enc, prefix);
    for (std::size_t t = 0; t < prefix.size(); ++t) {
      const auto a = inc.step(prefix[t]);
      const auto b = m.decode_step(std::span(prefix).first(t + 1), enc);
      CHECK(inc.length() == t + 1);
      CHECK(a.p_gen == doctest::Approx(b.p_gen).epsilon(1e-10));
      for (std::size_t i = 0; i < a.p_extended.size(); ++i) {
        CHECK(std::abs(a.p_extended[i] - b.p_extended[i]) < 1e-10);
        CHECK(std::abs(rows.at(t, i) - b.p_extended[i]) < 1e-12);
      }
      for (std::size_t i = 0; i < a.alpha.size(); ++i) CHECK(std::abs(a.alpha[i] - b.alpha[i]) < 1e-10);
    }
  }
}

TEST_CASE("a copied decoder branches independently") {
  const ModelConfig c = toy_config();
  const Model m = Model::initialize(c, 2);
  const std::vector<int> src{14, 15, 16};
  IncrementalDecoder a(m, src, src);
  a.step(corpus::kBos);
  IncrementalDecoder b = a;
  const auto pa = a.step(14);
  const auto pb = b.step(15);
  const auto ref = m.decode_step(std::vector<int>{corpus::kBos, 15}, m.encode(src, src));
  CHECK(pa.p_extended != pb.p_extended);
  for (std::size_t i = 0; i < ref.p_extended.size(); ++i)
    CHECK(std::abs(pb.p_extended[i] - ref.p_extended[i]) < 1e-10);
}

TEST_CASE("every parameter gradient matches finite differences on a toy model") {
  for (const GateInput gate : {GateInput::embedding, GateInput::hidden}) {
    ModelConfig c = toy_config();
    c.gate_input = gate;
    Model m = Model::initialize(c, 21);
    // A target mixing vocabulary ids, a copied OOV id and one id that is only
    // reachable through the vocabulary head.
    const std::vector<int> ext{14, c.vocab_size, 15, 16, c.vocab_size + 1, c.vocab_size};
    const auto ids = embeddable(ext, c.vocab_size);
    const std::vector<int> target{c.vocab_size, 15, 17, c.vocab_size + 1, corpus::kEos};
    std::vector<std::pair<std::string, Tensor>> params;
    for (std::size_t i = 0; i < m.params().count(); ++i) {
      Tensor t = m.params().tensors()[i];
      t.set_requires_grad(true);
      params.emplace_back(m.params().names()[i], t);
    }
    const auto r = testing::check_gradients([&] { return m.loss(ids, ext, target); }, params);
    INFO("worst " << r.worst_name << "[" << r.worst_index << "] rel " << r.worst_rel_error);
    CHECK(r.checked == m.params().scalar_count());
    CHECK(r.worst_rel_error < 1e-4);
  }
}

TEST_CASE("make_examples") {
  const auto split = corpus::generate_split(5, {40, 5, 5});
  const auto vocab = corpus::Vocabulary::build(split.train);
  ModelConfig c;
  c.vocab_size = vocab.size();
  const auto ex = make_examples(split.train, vocab, c);
  REQUIRE(ex.size() == 40);
  for (const auto& e : ex) {
    CHECK(e.ids.size() == e.ext_ids.size());
    CHECK(e.target.back() == corpus::kEos);
  }
  c.max_oov_slots = 0;
  bool any_oov = false;
  for (const auto& inst : split.train)
    any_oov = any_oov || !corpus::encode_input(inst, vocab).oov.empty();
  if (any_oov) CHECK_THROWS_AS(make_examples(split.train, vocab, c), CapacityError);
  c.max_oov_slots = 64;
  c.copy = false;
  for (const auto& e : make_examples(split.train, vocab, c))
    for (int id : e.target) CHECK(id < vocab.size());
}

TEST_CASE("initial loss of the vocabulary head is close to uniform") {
  const auto split = corpus::generate_split(6, {200, 20, 5});
  const auto vocab = corpus::Vocabulary::build(split.train);
  ModelConfig c;
  c.vocab_size = vocab.size();
  c.copy = false;
  const Model m = Model::initialize(c, 6);
  const auto ex = make_examples(split.valid, vocab, c);
  const double uniform = std::log(static_cast<double>(c.extended_size()));
  const double loss = evaluate_loss(m, std::span(ex).first(16));
  INFO("loss " << loss << " vs ln " << uniform);
  CHECK(std::abs(loss - uniform) / uniform < 0.10);
}

TEST_CASE("sixteen instances are memorized within 200 steps") {
  const auto split = corpus::generate_split(11, {16, 1, 1});
  const auto vocab = corpus::Vocabulary::build(split.train, 1);
  ModelConfig c;
  c.vocab_size = vocab.size();
  c.d_model = 64;
  c.ffn_dim = 128;
  const auto ex = make_examples(split.train, vocab, c);
  Model m = Model::initialize(c, 11);
  TrainConfig tc;
  tc.lr = 2e-3;
  tc.warmup = 20;
  tc.batch = 16;
  tc.epochs = 200;
  tc.weight_decay = 0.0;
  const auto res = train(m, ex, {}, tc);
  CHECK(res.state.step == 200);
  const double final_loss = evaluate_loss(m, ex);
  INFO("final loss " << final_loss);
  CHECK(final_loss < 0.05);
}

TEST_CASE("training tracks steps, keeps the best snapshot and resumes") {
  const auto split = corpus::generate_split(12, {24, 6, 1});
  const auto vocab = corpus::Vocabulary::build(split.train, 1);
  ModelConfig c = toy_config(vocab.size());
  c.d_model = 16;
  c.max_src = 256;
  c.max_tgt = 256;
  c.max_oov_slots = 64;
  const auto tr = make_examples(split.train, vocab, c);
  const auto va = make_examples(split.valid, vocab, c);
  TrainConfig tc;
  tc.lr = 3e-3;
  tc.warmup = 2;
  tc.batch = 8;
  tc.epochs = 4;

  Model straight = Model::initialize(c, 1);
  const auto full = train(straight, tr, va, tc);
  REQUIRE(full.curve.size() == 4);
  CHECK(full.curve.back().step == 12);
  CHECK(full.curve.front().train_loss > full.curve.back().train_loss);
  double best = full.curve[0].valid_loss;
  for (const auto& s : full.curve) best = std::min(best, s.valid_loss);
  CHECK(full.state.best_valid_loss == best);
  const Model snapshot(c, full.best_params);
  CHECK(evaluate_loss(snapshot, va) == doctest::Approx(best).epsilon(1e-12));

  // stopping early keeps the four-epoch schedule
  tc.max_steps = 6;
  Model first = Model::initialize(c, 1);
  const auto half = train(first, tr, va, tc);
  CHECK(half.state.step == 6);
  CHECK(half.state.epoch == 2);
  tc.max_steps = 0;
  const auto rest = train(first, tr, va, tc, &half.state);
  REQUIRE(rest.curve.size() == 2);
  CHECK(rest.curve.front().epoch == 3);
  CHECK(rest.state.step == 12);
  // same shuffles, same schedule, same moments: the split run lands where the straight one did
  for (std::size_t i = 0; i < first.params().count(); ++i) {
    const auto a = first.params().tensors()[i].values();
    const auto b = straight.params().tensors()[i].values();
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(train(first, {}, va, tc), ConfigError);
}

TEST_CASE("checkpoints round-trip bit for bit") {
  corpus::Vocabulary vocab;
  ModelConfig c = toy_config(vocab.size());
  c.d_model = 16;
  Checkpoint ck{c, Model::initialize(c, 4).params(), vocab, 4, {}};
  ck.state.step = 17;
  ck.state.epoch = 2;
  ck.state.best_valid_loss = 0.5;
  const auto p1 = temp_path("a.ckpt"), p2 = temp_path("b.ckpt");
  save_checkpoint(p1, ck);
  const Checkpoint back = load_checkpoint(p1);
  CHECK(back.config == c);
  CHECK(back.seed == 4);
  CHECK(back.state.step == 17);
  CHECK(back.state.epoch == 2);
  CHECK(back.state.best_valid_loss == 0.5);
  CHECK(back.vocab.tokens() == vocab.tokens());
  CHECK(back.params.names() == ck.params.names());
  save_checkpoint(p2, back);
  CHECK(read_bytes(p1) == read_bytes(p2));

  const std::vector<int> src{20, 30, 40};
  const auto a = ck.model().decode_step(std::vector<int>{corpus::kBos, 30}, ck.model().encode(src, src));
  const auto b = back.model().decode_step(std::vector<int>{corpus::kBos, 30}, back.model().encode(src, src));
  CHECK(a.p_extended == b.p_extended);
}

TEST_CASE("optimizer moments survive a checkpoint") {
  corpus::Vocabulary vocab;
  ModelConfig c = toy_config(vocab.size());
  Checkpoint ck{c, Model::initialize(c, 4).params(), vocab, 4, {}};
  for (const auto& t : ck.params.tensors()) {
    ck.state.first_moments.emplace_back(t.size(), 0.25);
    ck.state.second_moments.emplace_back(t.size(), 0.5);
  }
  const auto p = temp_path("moments.ckpt");
  save_checkpoint(p, ck);
  const auto back = load_checkpoint(p);
  CHECK(back.state.first_moments == ck.state.first_moments);
  CHECK(back.state.second_moments == ck.state.second_moments);
}

TEST_CASE("damaged checkpoints are refused") {
  corpus::Vocabulary vocab;
  ModelConfig c = toy_config(vocab.size());
  const Checkpoint ck{c, Model::initialize(c, 4).params(), vocab, 4, {}};
  const auto good = temp_path("good.ckpt");
  save_checkpoint(good, ck);
  const std::string bytes = read_bytes(good);
  auto write = [](const fs::path& p, const std::string& b) {
    std::ofstream(p, std::ios::binary | std::ios::trunc) << b;
  };

  const auto bad = temp_path("bad.ckpt");
  for (std::size_t cut : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    write(bad, bytes.substr(0, cut));
    CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);
  }
  write(bad, bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);
  std::string wrong_version = bytes;
  wrong_version[8] = static_cast<char>(kCheckpointVersion + 1);
  write(bad, wrong_version);
  CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);
  std::string not_ours = bytes;
  not_ours[0] = 'X';
  write(bad, not_ours);
  CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), CheckpointError);

  // parameters from a wider model than the config describes
  ModelConfig wide = c;
  wide.d_model = 16;
  Checkpoint mismatched{c, Model::initialize(wide, 4).params(), vocab, 4, {}};
  save_checkpoint(bad, mismatched);
  CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);
}
