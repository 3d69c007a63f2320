#include "seqslice/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "seqslice/checkpoint.hpp"
#include "seqslice/corpus.hpp"
#include "seqslice/decode.hpp"
#include "seqslice/metrics.hpp"
#include "seqslice/minilang.hpp"
#include "seqslice/random.hpp"
#include "seqslice/train.hpp"

namespace seqslice::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

SEQSLICE_DEFINE_ERROR(UsageError, true);

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string config_hash(const json& config) { return hex64(fnv1a(config.dump())); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write to " + path.string() + " failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path.string());
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw UsageError(path.string() + " exists (use --force to overwrite)");
  }
}

void ensure_parent(const fs::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

decode::Granularity granularity_from(const std::string& name) {
  if (name == "statement") return decode::Granularity::statement;
  if (name == "token") return decode::Granularity::token;
  throw UsageError("unknown granularity '" + name + "' (expected statement or token)");
}

json model_config_json(const model::ModelConfig& c) {
  return {{"d_model", c.d_model},       {"heads", c.heads},     {"enc_layers", c.enc_layers},
          {"dec_layers", c.dec_layers}, {"ffn_dim", c.ffn_dim}, {"max_src", c.max_src},
          {"max_tgt", c.max_tgt},       {"vocab_size", c.vocab_size},
          {"max_oov_slots", c.max_oov_slots}, {"copy", c.copy},
          {"gate_input", std::string(model::to_string(c.gate_input))}};
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
  std::uint64_t seed = 0;
  std::string out;
  corpus::SplitSizes sizes;
  corpus::GenConfig gen;
  bool force = false;
};

void cmd_gen(const GenArgs& a, std::ostream& out) {
  const fs::path dir(a.out);
  const fs::path files[] = {dir / "train.jsonl", dir / "valid.jsonl", dir / "test.jsonl",
                            dir / "manifest.json"};
  for (const auto& f : files) refuse_overwrite(f, a.force);
  fs::create_directories(dir);

  const auto split = corpus::generate_split(a.seed, a.sizes, a.gen);
  corpus::save_jsonl(files[0], split.train);
  corpus::save_jsonl(files[1], split.valid);
  corpus::save_jsonl(files[2], split.test);

  const json config = {{"seed", a.seed},
                       {"sizes", {{"train", a.sizes.train}, {"valid", a.sizes.valid}, {"test", a.sizes.test}}},
                       {"generator",
                        {{"max_lines", a.gen.max_lines},
                         {"var_pool", a.gen.var_pool},
                         {"nesting_depth", a.gen.nesting_depth},
                         {"common_name_rate", a.gen.common_name_rate}}}};
  const json manifest = {{"command", "gen"},
                         {"config", config},
                         {"config_hash", config_hash(config)},
                         {"files",
                          {{"train", {{"path", "train.jsonl"}, {"count", split.train.size()}}},
                           {"valid", {{"path", "valid.jsonl"}, {"count", split.valid.size()}}},
                           {"test", {{"path", "test.jsonl"}, {"count", split.test.size()}}}}}};
  write_text(files[3], manifest.dump(2) + "\n");
  out << "wrote " << split.train.size() << "/" << split.valid.size() << "/" << split.test.size()
      << " instances to " << dir.string() << " (config " << config_hash(config) << ")\n";
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  model::TrainConfig train;
  model::ModelConfig model;
  std::string gate_input = "embedding";
  int layers = 2;
  bool no_copy = false;
  int min_count = 5;
  std::string resume;
  std::string curve;
  std::size_t valid_limit = 0;
  bool force = false;
};

void cmd_train(TrainArgs a, std::ostream& out) {
  const fs::path dir(a.data);
  const fs::path train_path = dir / "train.jsonl", valid_path = dir / "valid.jsonl";
  require_file(train_path, "training data");
  require_file(valid_path, "validation data");
  const fs::path ckpt_path(a.out);
  fs::path last_path = ckpt_path;
  last_path += ".last";
  const fs::path curve_path = a.curve.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.curve);
  fs::path manifest_path = ckpt_path;
  manifest_path += ".manifest.json";
  const bool resuming = !a.resume.empty();
  if (resuming) {
    require_file(a.resume, "checkpoint to resume");
  } else {
    if (!a.seed) throw UsageError("train needs --seed");
    for (const auto& f : {ckpt_path, last_path, curve_path}) refuse_overwrite(f, a.force);
  }
  ensure_parent(ckpt_path);

  const auto train_set = corpus::load_jsonl(train_path);
  auto valid_set = corpus::load_jsonl(valid_path);
  if (train_set.empty()) throw UsageError("training split is empty");
  if (a.valid_limit && valid_set.size() > a.valid_limit) valid_set.resize(a.valid_limit);

  std::optional<model::Checkpoint> resumed;
  corpus::Vocabulary vocab;
  model::ModelConfig mc;
  std::uint64_t seed = 0;
  if (resuming) {
    resumed = model::load_checkpoint(a.resume);
    vocab = resumed->vocab;
    mc = resumed->config;
    seed = resumed->seed;
    if (a.seed && *a.seed != seed) throw UsageError("--seed differs from the resumed run's seed");
  } else {
    seed = *a.seed;
    vocab = corpus::Vocabulary::build(train_set, a.min_count);
    mc = a.model;
    mc.enc_layers = mc.dec_layers = a.layers;
    mc.vocab_size = vocab.size();
    mc.copy = !a.no_copy;
    mc.gate_input = model::gate_input_from_string(a.gate_input);
    mc.validate();
  }
  a.train.seed = seed;

  const auto train_examples = model::make_examples(train_set, vocab, mc);
  const auto valid_examples = model::make_examples(valid_set, vocab, mc);
  model::Model m = resumed ? resumed->model() : model::Model::initialize(mc, seed);

  const bool append = resuming && fs::exists(curve_path);
  std::ofstream curve(curve_path, append ? std::ios::app : std::ios::trunc);
  if (!curve) throw UsageError("cannot write " + curve_path.string());
  if (!append) curve << "epoch,step,train_loss,valid_loss,lr,seconds\n";
  out << "training " << train_examples.size() << " examples, vocabulary " << vocab.size()
      << ", " << (mc.copy ? "copy on" : "copy off") << ", "
      << m.params().scalar_count() << " parameters\n";
  auto report = [&](const model::EpochStats& s) {
    char line[200];
    std::snprintf(line, sizeof line, "%zu,%zu,%.6f,%.6f,%.6g,%.1f\n", s.epoch, s.step, s.train_loss,
                  s.valid_loss, s.lr, s.seconds);
    curve << line << std::flush;
    std::snprintf(line, sizeof line, "epoch %zu  step %zu  train %.4f  valid %.4f  lr %.3g  %.0fs\n",
                  s.epoch, s.step, s.train_loss, s.valid_loss, s.lr, s.seconds);
    out << line << std::flush;
  };
  const auto result = model::train(m, train_examples, valid_examples, a.train,
                                   resumed ? &resumed->state : nullptr, report);

  model::Checkpoint last{mc, m.params(), vocab, seed, result.state};
  model::save_checkpoint(last_path, last);
  model::Checkpoint best{mc, result.best_params, vocab, seed, {}};
  best.state.epoch = result.best_epoch;
  best.state.best_valid_loss = result.state.best_valid_loss;
  for (const auto& s : result.curve) {
    if (s.epoch == result.best_epoch) best.state.step = s.step;
  }
  if (resumed && result.best_epoch == resumed->state.epoch && fs::exists(ckpt_path)) {
    // No epoch of this run improved on the earlier best; keep that file.
    out << "validation loss did not improve; " << ckpt_path.string() << " unchanged\n";
  } else {
    model::save_checkpoint(ckpt_path, best);
  }

  const json config = {{"seed", seed},
                       {"model", model_config_json(mc)},
                       {"train",
                        {{"lr", a.train.lr},
                         {"batch", a.train.batch},
                         {"warmup", a.train.warmup},
                         {"epochs", a.train.epochs},
                         {"weight_decay", a.train.weight_decay},
                         {"clip_norm", a.train.clip_norm},
                         {"max_steps", a.train.max_steps},
                         {"min_count", a.min_count}}},
                       {"data", fs::absolute(dir).string()}};
  json curve_json = json::array();
  for (const auto& s : result.curve) {
    curve_json.push_back({{"epoch", s.epoch}, {"step", s.step}, {"train_loss", s.train_loss},
                          {"valid_loss", s.valid_loss}});
  }
  const json manifest = {{"command", "train"},
                         {"config", config},
                         {"config_hash", config_hash(config)},
                         {"no_copy", !mc.copy},
                         {"best_epoch", result.best_epoch},
                         {"steps", result.state.step},
                         {"curve", curve_json}};
  write_text(manifest_path, manifest.dump(2) + "\n");
  out << "best epoch " << result.best_epoch << ", checkpoint " << ckpt_path.string() << "\n";
}

// ---- slice ----------------------------------------------------------------

struct SliceArgs {
  std::string ckpt;
  std::string source;
  std::string var;
  int line = 0;
  bool no_lexical = false;
  bool no_syntactic = false;
  int beam = 3;
  int max_len = 256;
  std::string granularity = "statement";
  std::string trace;
};

void cmd_slice(const SliceArgs& a, std::ostream& out) {
  require_file(a.ckpt, "checkpoint");
  require_file(a.source, "source file");
  const std::string program = read_text(a.source);
  const auto lines = lang::split_lines(program);
  if (a.line < 1 || a.line > static_cast<int>(lines.size())) {
    throw oracle::CriterionError("line " + std::to_string(a.line) + " is outside the source (" +
                                 std::to_string(lines.size()) + " lines)");
  }
  bool found = false;
  for (const auto& tok : lang::tokenize(lines[static_cast<std::size_t>(a.line) - 1])) {
    found = found || (tok.kind == lang::TokenKind::identifier && tok.text == a.var);
  }
  if (!found) {
    throw oracle::CriterionError("variable '" + a.var + "' does not occur on line " +
                                 std::to_string(a.line));
  }
  decode::BeamConfig bc;
  bc.beam_size = a.beam;
  bc.max_len = a.max_len;
  bc.lexical_on = !a.no_lexical;
  bc.syntactic_on = !a.no_syntactic;
  bc.granularity = granularity_from(a.granularity);
  bc.record_trace = !a.trace.empty();

  const auto ckpt = model::load_checkpoint(a.ckpt);
  const model::Model m = ckpt.model();
  corpus::SliceInstance inst;
  inst.program = program;
  inst.criterion = {a.var, a.line};
  const auto result = decode::slice_instance(m, ckpt.vocab, inst, bc);
  if (!a.trace.empty()) {
    const auto encoded = corpus::encode_input(inst, ckpt.vocab, static_cast<std::size_t>(m.config().max_src));
    ensure_parent(a.trace);
    write_text(a.trace, decode::trace_to_json(result.trace, ckpt.vocab, encoded.oov).dump(1) + "\n");
  }
  out << result.slice_text << "\n";
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string ckpt;
  std::string ckpt_no_copy;
  std::string data;
  std::string out = "report";
  bool ablate = false;
  bool grid = false;
  std::vector<std::string> corrupt;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::size_t limit = 0;
  bool no_lexical = false;
  bool no_syntactic = false;
  int beam = 3;
  int max_len = 256;
  std::string granularity = "statement";
  bool force = false;
};

std::vector<corpus::SliceInstance> corrupt_all(const std::vector<corpus::SliceInstance>& in,
                                               corpus::Corruption kind, std::uint64_t seed) {
  std::vector<corpus::SliceInstance> out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.push_back(corpus::corrupt(in[i], kind, substream_seed(seed, "corrupt", i)));
  }
  return out;
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  require_file(a.ckpt, "checkpoint");
  require_file(a.data, "test data");
  if ((a.ablate || a.grid) && a.ckpt_no_copy.empty()) {
    throw UsageError("--ablate and --grid need --ckpt-no-copy");
  }
  if (!a.ckpt_no_copy.empty()) require_file(a.ckpt_no_copy, "no-copy checkpoint");
  const fs::path json_path = a.out + ".json", txt_path = a.out + ".txt";
  refuse_overwrite(json_path, a.force);
  refuse_overwrite(txt_path, a.force);
  std::vector<corpus::Corruption> kinds;
  for (const auto& k : a.corrupt) {
    if (k == "all") {
      kinds = {corpus::Corruption::missing_class, corpus::Corruption::missing_semicolons,
               corpus::Corruption::unmatched_braces};
      break;
    }
    const auto kind = corpus::corruption_from_string(k);
    if (kind == corpus::Corruption::none) throw UsageError("--corrupt needs a corruption kind");
    kinds.push_back(kind);
  }

  auto instances = corpus::load_jsonl(a.data);
  if (a.limit && instances.size() > a.limit) instances.resize(a.limit);
  for (const auto& inst : instances) {
    if (inst.corruption != corpus::Corruption::none && !kinds.empty()) {
      throw UsageError("--corrupt applies to uncorrupted data only");
    }
  }

  const auto full = model::load_checkpoint(a.ckpt);
  std::optional<model::Checkpoint> no_copy;
  if (!a.ckpt_no_copy.empty()) {
    no_copy = model::load_checkpoint(a.ckpt_no_copy);
    if (no_copy->config.copy) throw model::ConfigError(a.ckpt_no_copy + " was trained with copy on");
  }
  if ((a.ablate || a.grid) && !full.config.copy) {
    throw model::ConfigError(a.ckpt + " was trained without copy; pass it as --ckpt-no-copy");
  }
  const model::Model full_model = full.model();
  std::optional<model::Model> no_copy_model;
  if (no_copy) no_copy_model.emplace(no_copy->model());

  std::vector<metrics::EvalSetting> settings;
  if (a.ablate || a.grid) {
    settings = metrics::ablation_settings(a.grid);
  } else {
    metrics::EvalSetting s;
    s.copy = full.config.copy;
    s.lexical = !a.no_lexical;
    s.syntactic = !a.no_syntactic;
    s.name = s.copy && s.lexical && s.syntactic ? "full"
             : std::string(s.copy ? "+" : "-") + "copy" + (s.lexical ? "+" : "-") + "lex" +
                   (s.syntactic ? "+" : "-") + "syn";
    settings.push_back(s);
  }
  decode::BeamConfig bc;
  bc.beam_size = a.beam;
  bc.max_len = a.max_len;
  bc.granularity = granularity_from(a.granularity);

  std::vector<std::pair<corpus::Corruption, std::vector<corpus::SliceInstance>>> blocks;
  if (kinds.empty()) {
    blocks.emplace_back(instances.empty() ? corpus::Corruption::none : instances.front().corruption,
                        instances);
  } else {
    for (auto kind : kinds) blocks.emplace_back(kind, corrupt_all(instances, kind, a.seed));
  }

  std::vector<metrics::EvalReport> reports;
  for (const auto& [kind, data] : blocks) {
    for (auto s : settings) {
      s.corruption = kind;
      const model::Model& m = s.copy ? full_model : *no_copy_model;
      reports.push_back(metrics::evaluate(m, full.vocab, data, s, bc, a.jobs));
      const auto& r = reports.back();
      out << metrics::format_table({r}).substr(metrics::format_table({}).size()) << std::flush;
      if (r.failures) out << "  (" << r.failures << " instances failed to decode)\n";
    }
  }

  const json config = {{"ckpt", fs::absolute(a.ckpt).string()},
                       {"ckpt_no_copy", a.ckpt_no_copy.empty() ? "" : fs::absolute(a.ckpt_no_copy).string()},
                       {"data", fs::absolute(a.data).string()},
                       {"seed", a.seed},
                       {"limit", a.limit},
                       {"ablate", a.ablate},
                       {"grid", a.grid},
                       {"corrupt", a.corrupt}};
  json rows = json::array();
  for (const auto& r : reports) rows.push_back(metrics::report_to_json(r));
  const json doc = {{"config", config}, {"config_hash", config_hash(config)}, {"reports", rows}};
  ensure_parent(json_path);
  write_text(json_path, doc.dump(1) + "\n");
  const std::string table = metrics::format_table(reports);
  write_text(txt_path, table);
  out << "\n" << table;
}

// ---- corrupt --------------------------------------------------------------

struct CorruptArgs {
  std::string data;
  std::string kind;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

void cmd_corrupt(const CorruptArgs& a, std::ostream& out) {
  require_file(a.data, "input data");
  const auto kind = corpus::corruption_from_string(a.kind);
  if (kind == corpus::Corruption::none) throw UsageError("--kind must name a corruption");
  if (fs::exists(a.out) && fs::equivalent(a.out, a.data)) {
    throw UsageError("refusing to overwrite the input file");
  }
  refuse_overwrite(a.out, a.force);
  const auto corrupted = corrupt_all(corpus::load_jsonl(a.data), kind, a.seed);
  ensure_parent(a.out);
  corpus::save_jsonl(a.out, corrupted);
  out << "wrote " << corrupted.size() << " " << corpus::to_string(kind) << " instances to " << a.out << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned static slicing with constrained decoding"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate train/valid/test splits");
  g->add_option("--seed", gen.seed, "Run seed")->required();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--train", gen.sizes.train, "Training instances")->capture_default_str();
  g->add_option("--valid", gen.sizes.valid, "Validation instances")->capture_default_str();
  g->add_option("--test", gen.sizes.test, "Test instances")->capture_default_str();
  g->add_option("--max-lines", gen.gen.max_lines, "Longest program in lines")->capture_default_str();
  g->add_flag("--force", gen.force, "Overwrite existing files");

  TrainArgs tr;
  std::uint64_t train_seed = 0;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", tr.data, "Directory with train.jsonl and valid.jsonl")->required();
  t->add_option("--out", tr.out, "Checkpoint path (best validation loss)")->required();
  auto* seed_opt = t->add_option("--seed", train_seed, "Run seed (required unless resuming)");
  t->add_option("--lr", tr.train.lr, "Peak learning rate")->capture_default_str();
  t->add_option("--batch", tr.train.batch, "Batch size")->capture_default_str();
  t->add_option("--warmup", tr.train.warmup, "Warmup steps")->capture_default_str();
  t->add_option("--epochs", tr.train.epochs, "Epochs")->capture_default_str();
  t->add_option("--weight-decay", tr.train.weight_decay)->capture_default_str();
  t->add_option("--max-steps", tr.train.max_steps, "Stop after this many steps (0: no limit)");
  t->add_option("--d-model", tr.model.d_model)->capture_default_str();
  t->add_option("--heads", tr.model.heads)->capture_default_str();
  t->add_option("--layers", tr.layers, "Encoder and decoder layers")->capture_default_str();
  t->add_option("--ffn", tr.model.ffn_dim)->capture_default_str();
  t->add_option("--gate-input", tr.gate_input, "embedding or hidden")->capture_default_str();
  t->add_option("--min-count", tr.min_count, "Identifier frequency for the vocabulary")->capture_default_str();
  t->add_option("--valid-limit", tr.valid_limit, "Use at most this many validation instances");
  t->add_flag("--no-copy", tr.no_copy, "Pin p_gen to 1 (no copy path)");
  t->add_option("--resume", tr.resume, "Continue from a .last checkpoint");
  t->add_option("--curve", tr.curve, "Loss curve CSV (default <out>.loss.csv)");
  t->add_flag("--force", tr.force, "Overwrite existing outputs");

  SliceArgs sl;
  auto* s = app.add_subcommand("slice", "Slice one source file");
  s->add_option("--ckpt", sl.ckpt)->required();
  s->add_option("--source", sl.source)->required();
  s->add_option("--var", sl.var)->required();
  s->add_option("--line", sl.line)->required();
  s->add_flag("--no-lexical", sl.no_lexical);
  s->add_flag("--no-syntactic", sl.no_syntactic);
  s->add_option("--beam", sl.beam)->capture_default_str();
  s->add_option("--max-len", sl.max_len)->capture_default_str();
  s->add_option("--granularity", sl.granularity, "statement or token")->capture_default_str();
  s->add_option("--trace", sl.trace, "Write the decode trace JSON here");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a test split");
  e->add_option("--ckpt", ev.ckpt)->required();
  e->add_option("--ckpt-no-copy", ev.ckpt_no_copy, "Checkpoint trained with --no-copy");
  e->add_option("--data", ev.data, "Test JSONL")->required();
  e->add_option("--out", ev.out, "Report path prefix (.json and .txt)")->capture_default_str();
  e->add_flag("--ablate", ev.ablate, "Full model and each single component removed");
  e->add_flag("--grid", ev.grid, "All copy x lexical x syntactic settings");
  e->add_option("--corrupt", ev.corrupt, "Corruption kind(s) or 'all'");
  e->add_option("--seed", ev.seed, "Corruption seed")->capture_default_str();
  e->add_option("--jobs", ev.jobs, "Decoding workers (0: all cores)")->capture_default_str();
  e->add_option("--limit", ev.limit, "Evaluate the first N instances only");
  e->add_flag("--no-lexical", ev.no_lexical);
  e->add_flag("--no-syntactic", ev.no_syntactic);
  e->add_option("--beam", ev.beam)->capture_default_str();
  e->add_option("--max-len", ev.max_len)->capture_default_str();
  e->add_option("--granularity", ev.granularity)->capture_default_str();
  e->add_flag("--force", ev.force, "Overwrite existing reports");

  CorruptArgs co;
  auto* c = app.add_subcommand("corrupt", "Corrupt every instance of a JSONL file");
  c->add_option("--data", co.data)->required();
  c->add_option("--kind", co.kind, "missing_class, missing_semicolons or unmatched_braces")->required();
  c->add_option("--seed", co.seed)->capture_default_str();
  c->add_option("--out", co.out)->required();
  c->add_flag("--force", co.force);

  std::vector<char*> argv;
  for (const auto& arg : args) argv.push_back(const_cast<char*>(arg.c_str()));
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*g) cmd_gen(gen, out);
    if (*t) {
      if (seed_opt->count()) tr.seed = train_seed;
      cmd_train(tr, out);
    }
    if (*s) cmd_slice(sl, out);
    if (*e) cmd_eval(ev, out);
    if (*c) cmd_corrupt(co, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return ex.user_error() ? 2 : 1;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace seqslice::cli
