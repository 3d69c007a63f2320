#include "seqslice/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "seqslice/random.hpp"

namespace seqslice::model {

std::vector<Example> make_examples(std::span<const corpus::SliceInstance> instances,
                                   const corpus::Vocabulary& vocab, const ModelConfig& config) {
  std::vector<Example> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    corpus::EncodedInput in =
        corpus::encode_input(inst, vocab, static_cast<std::size_t>(config.max_src));
    if (static_cast<int>(in.oov.size()) > config.max_oov_slots) {
      throw CapacityError("source has " + std::to_string(in.oov.size()) +
                          " out-of-vocabulary tokens, max_oov_slots is " +
                          std::to_string(config.max_oov_slots));
    }
    std::vector<int> target = corpus::encode_target(
        inst, vocab, in, static_cast<std::size_t>(config.max_tgt), !config.copy);
    out.push_back({std::move(in.ids), std::move(in.ext_ids), std::move(target)});
  }
  return out;
}

double evaluate_loss(const Model& model, std::span<const Example> examples) {
  if (examples.empty()) return std::nan("");
  double total = 0.0;
  for (const auto& ex : examples) total += model.loss(ex.ids, ex.ext_ids, ex.target).item();
  return total / static_cast<double>(examples.size());
}

TrainResult train(Model& model, std::span<const Example> train_set,
                  std::span<const Example> valid_set, const TrainConfig& config,
                  const TrainingState* resume,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (config.batch == 0) throw ConfigError("batch size must be positive");

  const std::size_t per_epoch = (train_set.size() + config.batch - 1) / config.batch;
  tensor::AdamWConfig opt_cfg;
  opt_cfg.lr = config.lr;
  opt_cfg.weight_decay = config.weight_decay;
  opt_cfg.warmup_steps = config.warmup;
  opt_cfg.total_steps = per_epoch * config.epochs;
  opt_cfg.clip_norm = config.clip_norm;
  tensor::AdamW opt(opt_cfg);

  auto& params = model.params().tensors();
  for (auto& p : params) p.set_requires_grad(true);

  TrainResult result;
  std::size_t first_epoch = 1;
  double best = std::numeric_limits<double>::infinity();
  if (resume) {
    if (!resume->first_moments.empty()) {
      opt.restore(resume->step, resume->first_moments, resume->second_moments);
    } else {
      opt.restore(resume->step, {}, {});
    }
    first_epoch = resume->epoch + 1;
    best = resume->best_valid_loss;
    result.best_epoch = resume->epoch;
  }
  result.best_params = model.params().clone();

  std::vector<std::size_t> order(train_set.size());
  const double scale = 1.0 / static_cast<double>(config.batch);
  for (std::size_t epoch = first_epoch; epoch <= config.epochs; ++epoch) {
    if (config.max_steps && opt.steps_taken() >= config.max_steps) break;
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = substream(config.seed, "shuffle", epoch);
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      if (config.max_steps && opt.steps_taken() >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + config.batch);
      for (auto& p : params) p.zero_grad();
      // The mean over a short final batch is still taken over `batch`
      // slots, so its step is proportionally smaller.
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = train_set[order[i]];
        tensor::Tape tape;
        tensor::Tape::Scope scope(tape);
        Tensor loss = model.loss(ex.ids, ex.ext_ids, ex.target);
        loss_sum += loss.item();
        ++seen;
        tape.backward(tensor::scale(loss, scale));
      }
      stats.lr = opt.step(params);
    }
    stats.step = opt.steps_taken();
    stats.train_loss = seen ? loss_sum / static_cast<double>(seen) : std::nan("");
    stats.valid_loss = evaluate_loss(model, valid_set);
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!model.params().all_finite()) {
      throw Error("training diverged: non-finite parameters after epoch " + std::to_string(epoch));
    }

    const double score = valid_set.empty() ? stats.train_loss : stats.valid_loss;
    if (score < best || valid_set.empty()) {
      best = score;
      result.best_epoch = epoch;
      result.best_params = model.params().clone();
    }
    result.state.epoch = epoch;
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }

  result.state.step = opt.steps_taken();
  result.state.best_valid_loss = best;
  result.state.first_moments = opt.first_moments();
  result.state.second_moments = opt.second_moments();
  if (result.curve.empty() && resume) result.state.epoch = resume->epoch;
  return result;
}

}  // namespace seqslice::model
