#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "seqslice/metrics.hpp"

namespace seqslice::metrics {

namespace {

using nlohmann::json;

InstanceRecord run_one(const model::Model& model, const corpus::Vocabulary& vocab,
                       const corpus::SliceInstance& inst, const decode::BeamConfig& beam,
                       std::size_t index) {
  InstanceRecord rec;
  rec.index = index;
  rec.gold_lines = inst.gold_lines;
  rec.gold_text = inst.gold_text;
  try {
    const auto result = decode::slice_instance(model, vocab, inst, beam);
    rec.pred_text = result.slice_text;
    rec.pred_lines = corpus::slice_text_lines(result.slice_text);
    rec.finished = result.finished;
    const auto encoded =
        corpus::encode_input(inst, vocab, static_cast<std::size_t>(model.config().max_src));
    const auto allowed = decode::allowed_tokens(encoded.ext_ids, model.config().extended_size());
    for (int id : result.tokens) {
      ++rec.emitted_tokens;
      if (id < 0 || id >= static_cast<int>(allowed.size()) || !allowed[static_cast<std::size_t>(id)]) {
        ++rec.unsound_tokens;
      }
    }
    rec.scores = score_prediction(inst, rec.pred_text);
  } catch (const Error& e) {
    rec.error = e.what();
    rec.scores = {};
  }
  return rec;
}

std::string_view granularity_name(decode::Granularity g) {
  return g == decode::Granularity::token ? "token" : "statement";
}

json scores_json(const Scores& s) {
  return {{"acc_d", s.acc_d}, {"exact_match", s.exact_match}, {"tsed", s.tsed}, {"acc_d_cls", s.acc_d_cls}};
}

Scores scores_from_json(const json& j) {
  return {j.at("acc_d").get<double>(), j.at("exact_match").get<double>(), j.at("tsed").get<double>(),
          j.at("acc_d_cls").get<double>()};
}

}  // namespace

EvalReport evaluate(const model::Model& model, const corpus::Vocabulary& vocab,
                    const std::vector<corpus::SliceInstance>& instances,
                    const EvalSetting& setting, const decode::BeamConfig& beam, int jobs) {
  if (model.config().copy != setting.copy) {
    throw model::ConfigError("setting '" + setting.name + "' needs a checkpoint with copy " +
                             (setting.copy ? "on" : "off"));
  }
  if (model.config().vocab_size != vocab.size()) {
    throw model::ConfigError("checkpoint and vocabulary disagree on vocabulary size");
  }
  EvalReport report;
  report.setting = setting;
  report.beam = beam;
  report.beam.lexical_on = setting.lexical;
  report.beam.syntactic_on = setting.syntactic;
  report.beam.record_trace = false;
  report.records.resize(instances.size());

  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(instances.size(), 1));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      report.records[i] = run_one(model, vocab, instances[i], report.beam, i);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : report.records) {
    report.failures += !r.error.empty();
    report.unsound_tokens += r.unsound_tokens;
    report.emitted_tokens += r.emitted_tokens;
  }
  report.means = recompute_means(report.records);
  return report;
}

std::vector<EvalSetting> ablation_settings(bool grid) {
  if (!grid) {
    return {{"full", true, true, true, corpus::Corruption::none},
            {"no_copy", false, true, true, corpus::Corruption::none},
            {"no_lexical", true, false, true, corpus::Corruption::none},
            {"no_syntactic", true, true, false, corpus::Corruption::none}};
  }
  std::vector<EvalSetting> out;
  for (bool copy : {true, false}) {
    for (bool lex : {true, false}) {
      for (bool syn : {true, false}) {
        std::string name;
        if (copy && lex && syn) {
          name = "full";
        } else if (!copy && !lex && !syn) {
          name = "vanilla";
        } else {
          name = std::string(copy ? "+" : "-") + "copy" + (lex ? "+" : "-") + "lex" + (syn ? "+" : "-") + "syn";
        }
        out.push_back({name, copy, lex, syn, corpus::Corruption::none});
      }
    }
  }
  return out;
}

json report_to_json(const EvalReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"index", r.index},
                       {"pred_lines", r.pred_lines},
                       {"gold_lines", r.gold_lines},
                       {"pred_text", r.pred_text},
                       {"gold_text", r.gold_text},
                       {"metrics", scores_json(r.scores)},
                       {"finished", r.finished},
                       {"emitted_tokens", r.emitted_tokens},
                       {"unsound_tokens", r.unsound_tokens},
                       {"error", r.error}});
  }
  const auto& s = report.setting;
  return {{"setting",
           {{"name", s.name},
            {"copy", s.copy},
            {"lexical", s.lexical},
            {"syntactic", s.syntactic},
            {"corruption", std::string(corpus::to_string(s.corruption))}}},
          {"beam",
           {{"beam_size", report.beam.beam_size},
            {"max_len", report.beam.max_len},
            {"granularity", std::string(granularity_name(report.beam.granularity))},
            {"tau", report.beam.tau},
            {"length_normalize", report.beam.length_normalize}}},
          {"n", report.records.size()},
          {"means", scores_json(report.means)},
          {"failures", report.failures},
          {"emitted_tokens", report.emitted_tokens},
          {"unsound_tokens", report.unsound_tokens},
          {"records", records}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  const auto& s = j.at("setting");
  r.setting.name = s.at("name").get<std::string>();
  r.setting.copy = s.at("copy").get<bool>();
  r.setting.lexical = s.at("lexical").get<bool>();
  r.setting.syntactic = s.at("syntactic").get<bool>();
  r.setting.corruption = corpus::corruption_from_string(s.at("corruption").get<std::string>());
  const auto& b = j.at("beam");
  r.beam.beam_size = b.at("beam_size").get<int>();
  r.beam.max_len = b.at("max_len").get<int>();
  r.beam.granularity = b.at("granularity").get<std::string>() == "token" ? decode::Granularity::token
                                                                         : decode::Granularity::statement;
  r.beam.tau = b.at("tau").get<double>();
  r.beam.length_normalize = b.at("length_normalize").get<bool>();
  r.beam.lexical_on = r.setting.lexical;
  r.beam.syntactic_on = r.setting.syntactic;
  r.means = scores_from_json(j.at("means"));
  r.failures = j.at("failures").get<std::size_t>();
  r.emitted_tokens = j.at("emitted_tokens").get<std::size_t>();
  r.unsound_tokens = j.at("unsound_tokens").get<std::size_t>();
  for (const auto& x : j.at("records")) {
    InstanceRecord rec;
    rec.index = x.at("index").get<std::size_t>();
    rec.pred_lines = x.at("pred_lines").get<std::vector<int>>();
    rec.gold_lines = x.at("gold_lines").get<std::vector<int>>();
    rec.pred_text = x.at("pred_text").get<std::string>();
    rec.gold_text = x.at("gold_text").get<std::string>();
    rec.scores = scores_from_json(x.at("metrics"));
    rec.finished = x.at("finished").get<bool>();
    rec.emitted_tokens = x.at("emitted_tokens").get<std::size_t>();
    rec.unsound_tokens = x.at("unsound_tokens").get<std::size_t>();
    rec.error = x.at("error").get<std::string>();
    r.records.push_back(std::move(rec));
  }
  return r;
}

std::string format_table(const std::vector<EvalReport>& reports) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %-18s %8s %11s %8s %11s %6s\n", "setting", "corruption",
                "Acc-D", "ExactMatch", "TSED", "Acc-D(cls)", "n");
  out += buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-20s %-18s %8.2f %11.2f %8.2f %11.2f %6zu\n",
                  r.setting.name.c_str(), std::string(corpus::to_string(r.setting.corruption)).c_str(),
                  100.0 * r.means.acc_d, 100.0 * r.means.exact_match, 100.0 * r.means.tsed,
                  100.0 * r.means.acc_d_cls, r.records.size());
    out += buf;
  }
  return out;
}

}  // namespace seqslice::metrics
