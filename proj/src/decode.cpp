#include "seqslice/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqslice/inference.hpp"
#include "seqslice/tsed.hpp"

namespace seqslice::decode {

namespace {

using tensor::kMaskValue;

bool is_masked(double logit) { return logit <= kMaskValue / 2; }

class TransformerState : public DecoderState {
 public:
  explicit TransformerState(model::IncrementalDecoder dec) : dec_(std::move(dec)) {}
  std::unique_ptr<DecoderState> clone() const override {
    return std::make_unique<TransformerState>(dec_);
  }
  std::vector<double> step(int token) override {
    auto out = dec_.step(token);
    std::vector<double> scores(out.p_extended.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double p = out.p_extended[i];
      scores[i] = p > 0.0 ? std::log(p) : kMaskValue;
    }
    return scores;
  }

 private:
  model::IncrementalDecoder dec_;
};

/// Masked entries stay masked; the rest are normalized among themselves.
std::vector<double> log_softmax(std::vector<double> x) {
  double mx = kMaskValue;
  for (double v : x)
    if (!is_masked(v)) mx = std::max(mx, v);
  if (is_masked(mx)) return x;
  double z = 0.0;
  for (double v : x)
    if (!is_masked(v)) z += std::exp(v - mx);
  const double lz = mx + std::log(z);
  for (double& v : x)
    if (!is_masked(v)) v -= lz;
  return x;
}

/// Indices of the k largest scores, ties by ascending id; masked ones skipped.
std::vector<int> top_k(const std::vector<double>& scores, int k) {
  std::vector<int> idx;
  idx.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_masked(scores[i])) idx.push_back(static_cast<int>(i));
  }
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](int a, int b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  idx.resize(n);
  return idx;
}

bool is_boundary(int id, const corpus::Vocabulary& vocab) {
  if (id == corpus::kNewline) return true;
  if (id < 0 || id >= vocab.size()) return false;
  const std::string& t = vocab.token(id);
  return t == ";" || t == "}";
}

struct Hyp {
  std::vector<int> tokens;
  double score = 0.0;
  double t_prev = 0.0;
  std::unique_ptr<DecoderState> state;  // consumed everything but `feed`
  int feed = corpus::kBos;
};

struct Candidate {
  std::size_t parent;
  int token;
  double score;
  double t;
};

std::vector<int> extend(const std::vector<int>& y, int z) {
  std::vector<int> out(y);
  out.push_back(z);
  return out;
}

}  // namespace

std::unique_ptr<DecoderState> TransformerStepModel::start(const corpus::EncodedInput& input) const {
  return std::make_unique<TransformerState>(model::IncrementalDecoder(*model_, input.ids, input.ext_ids));
}

AllowedSet allowed_tokens(const std::vector<int>& ext_ids, int extended_size) {
  AllowedSet allowed(static_cast<std::size_t>(extended_size), false);
  for (int id : ext_ids) {
    if (id >= 0 && id < extended_size) allowed[static_cast<std::size_t>(id)] = true;
  }
  for (int id : {corpus::kEos, corpus::kSliceOpen, corpus::kSliceClose, corpus::kNewline}) {
    if (id < extended_size) allowed[static_cast<std::size_t>(id)] = true;
  }
  return allowed;
}

std::vector<double> apply_mask(std::vector<double> logits, const AllowedSet& allowed) {
  if (logits.size() != allowed.size()) {
    throw tensor::ShapeError("mask of " + std::to_string(allowed.size()) + " entries for " +
                             std::to_string(logits.size()) + " logits");
  }
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (allowed[i]) {
      any = true;
    } else {
      logits[i] = kMaskValue;
    }
  }
  if (!any) throw DegenerateMaskError("every token is masked");
  return logits;
}

nlohmann::json trace_to_json(const Trace& trace, const corpus::Vocabulary& vocab,
                             const std::vector<std::string>& oov) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& step : trace) {
    nlohmann::json beams = nlohmann::json::array();
    for (const auto& e : step.beams) {
      std::vector<std::string> tokens;
      for (int id : e.tokens) tokens.push_back(corpus::id_to_token(id, vocab, oov));
      beams.push_back({{"tokens", tokens},
                       {"score", e.score},
                       {"t_prev", e.t_prev},
                       {"action", e.action},
                       {"reason", e.reason}});
    }
    out.push_back({{"step", step.step}, {"beams", beams}});
  }
  return out;
}

BeamResult beam_search(const StepModel& model, const DecodeInput& input,
                       const corpus::Vocabulary& vocab, const BeamConfig& config) {
  if (config.beam_size < 1) throw model::ConfigError("beam_size must be at least 1");
  if (config.max_len < 1) throw model::ConfigError("max_len must be at least 1");
  const auto& oov = input.encoded.oov;
  const int k = config.beam_size;

  std::optional<AllowedSet> allowed;
  tsed::PrefixTsed tsed(input.source_text);
  const bool check_every_token = config.granularity == Granularity::token;

  BeamResult result;
  std::vector<Hyp> beam;
  beam.push_back({{}, 0.0, 0.0, model.start(input.encoded), corpus::kBos});
  std::vector<Hyp> completed;
  std::vector<Hyp> last_live;

  for (int t = 1; t <= config.max_len; ++t) {
    TraceStep trace_step{t, {}};
    auto note = [&](std::vector<int> tokens, double score, double tp, const char* action,
                    const char* reason) {
      if (config.record_trace) trace_step.beams.push_back({std::move(tokens), score, tp, action, reason});
    };

    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      Hyp& b = beam[i];
      std::vector<double> logits = b.state->step(b.feed);
      if (config.lexical_on) {
        if (!allowed) allowed = allowed_tokens(input.encoded.ext_ids, static_cast<int>(logits.size()));
        if (config.record_trace) {
          const auto raw = log_softmax(logits);
          for (int z : top_k(raw, k)) {
            if (!(*allowed)[static_cast<std::size_t>(z)]) {
              note(extend(b.tokens, z), b.score + raw[static_cast<std::size_t>(z)], b.t_prev,
                   "dismiss", "lexical_masked");
            }
          }
        }
        logits = apply_mask(std::move(logits), *allowed);
      }
      const auto lp = log_softmax(std::move(logits));
      for (int z : top_k(lp, k)) {
        const double s = b.score + lp[static_cast<std::size_t>(z)];
        if (z == corpus::kEos) {
          cands.push_back({i, z, s, b.t_prev});
          continue;
        }
        double t_cur = b.t_prev;
        if (config.syntactic_on && (check_every_token || is_boundary(z, vocab))) {
          t_cur = tsed.score(corpus::decode_slice_text(extend(b.tokens, z), vocab, oov));
          if (t_cur < b.t_prev - config.tau) {
            note(extend(b.tokens, z), s, t_cur, "dismiss", "tsed_drop");
            continue;
          }
        }
        cands.push_back({i, z, s, t_cur});
      }
    }

    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    // Finished hypotheses take up beam slots: the width shrinks by one for
    // every hypothesis in the pool.
    const std::size_t width = static_cast<std::size_t>(k) - completed.size();
    if (cands.size() > width) {
      for (std::size_t c = width; c < cands.size(); ++c) {
        note(extend(beam[cands[c].parent].tokens, cands[c].token), cands[c].score, cands[c].t,
             "dismiss", "pruned");
      }
      cands.resize(width);
    }

    std::vector<std::size_t> children(beam.size(), 0);
    for (const auto& c : cands) children[c.parent] += c.token != corpus::kEos;
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      Hyp& parent = beam[c.parent];
      if (c.token == corpus::kEos) {
        note(extend(parent.tokens, c.token), c.score, c.t, "terminate", "eos");
        completed.push_back({extend(parent.tokens, c.token), c.score, c.t, nullptr, c.token});
        continue;
      }
      Hyp h;
      h.tokens = extend(parent.tokens, c.token);
      h.score = c.score;
      h.t_prev = c.t;
      h.feed = c.token;
      // The last child of a parent takes its state instead of cloning it.
      h.state = --children[c.parent] == 0 ? std::move(parent.state) : parent.state->clone();
      note(h.tokens, h.score, h.t_prev, "accept", "");
      next.push_back(std::move(h));
    }
    if (config.record_trace) result.trace.push_back(std::move(trace_step));

    if (t == 1 && next.empty() && completed.empty()) {
      throw DecodeError("beam exhausted at the first step");
    }
    if (next.empty()) {
      last_live = std::move(beam);
      beam.clear();
      break;
    }
    beam = std::move(next);
  }
  if (!beam.empty()) last_live = std::move(beam);

  auto rank = [&](const Hyp& h) {
    if (!config.length_normalize || h.tokens.empty()) return h.score;
    return h.score / static_cast<double>(h.tokens.size());
  };
  const std::vector<Hyp>& pool = completed.empty() ? last_live : completed;
  const Hyp* best = nullptr;
  for (const auto& h : pool) {
    if (!best || rank(h) > rank(*best)) best = &h;
  }
  if (!best) throw DecodeError("no hypothesis survived");
  result.tokens = best->tokens;
  result.score = best->score;
  result.finished = !completed.empty();
  result.slice_text = corpus::decode_slice_text(result.tokens, vocab, oov);
  return result;
}

BeamResult slice_instance(const model::Model& model, const corpus::Vocabulary& vocab,
                          const corpus::SliceInstance& instance, const BeamConfig& config) {
  const auto& mc = model.config();
  if (mc.vocab_size != vocab.size()) {
    throw model::ConfigError("model expects " + std::to_string(mc.vocab_size) +
                             " vocabulary entries, vocabulary has " + std::to_string(vocab.size()));
  }
  DecodeInput input{corpus::encode_input(instance, vocab, static_cast<std::size_t>(mc.max_src)),
                    instance.program};
  if (static_cast<int>(input.encoded.oov.size()) > mc.max_oov_slots) {
    throw model::CapacityError("source has " + std::to_string(input.encoded.oov.size()) +
                               " out-of-vocabulary tokens, max_oov_slots is " +
                               std::to_string(mc.max_oov_slots));
  }
  BeamConfig cfg = config;
  cfg.max_len = std::min(cfg.max_len, mc.max_tgt);
  return beam_search(TransformerStepModel(model), input, vocab, cfg);
}

}  // namespace seqslice::decode
