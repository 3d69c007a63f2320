#include <fstream>

#include <json.hpp>

#include "seqslice/corpus.hpp"
#include "seqslice/minilang.hpp"

namespace seqslice::corpus {

namespace {

using nlohmann::json;

std::string where(std::size_t line_number) { return "line " + std::to_string(line_number) + ": "; }

const json& require(const json& obj, const char* key, std::size_t line_number) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DatasetError(where(line_number) + "missing key '" + key + "'");
  return *it;
}

std::vector<std::string> token_texts(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : lang::tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace

std::string to_json_line(const SliceInstance& inst) {
  json j;
  j["program"] = inst.program;
  j["criterion"] = {{"var", inst.criterion.variable}, {"line", inst.criterion.line}};
  j["gold_lines"] = inst.gold_lines;
  j["gold_text"] = inst.gold_text;
  j["corruption"] = std::string(to_string(inst.corruption));
  return j.dump();
}

SliceInstance from_json_line(std::string_view line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DatasetError(where(line_number) + "invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DatasetError(where(line_number) + "expected a JSON object");

  SliceInstance inst;
  try {
    inst.program = require(j, "program", line_number).get<std::string>();
    const json& crit = require(j, "criterion", line_number);
    inst.criterion.variable = require(crit, "var", line_number).get<std::string>();
    inst.criterion.line = require(crit, "line", line_number).get<int>();
    inst.gold_lines = require(j, "gold_lines", line_number).get<std::vector<int>>();
    inst.gold_text = require(j, "gold_text", line_number).get<std::string>();
    inst.corruption =
        corruption_from_string(require(j, "corruption", line_number).get<std::string>());
  } catch (const json::type_error& e) {
    throw DatasetError(where(line_number) + "wrong value type (" + e.what() + ")");
  } catch (const ArgumentError& e) {
    throw DatasetError(where(line_number) + e.what());
  }

  const int n_lines = static_cast<int>(lang::split_lines(inst.program).size());
  if (inst.criterion.line < 1 || inst.criterion.line > n_lines) {
    throw DatasetError(where(line_number) + "criterion line " +
                       std::to_string(inst.criterion.line) + " is outside the program");
  }
  bool on_line = false;
  for (const auto& t : lang::tokenize(inst.program)) {
    if (t.line == inst.criterion.line && t.text == inst.criterion.variable) on_line = true;
  }
  if (!on_line) {
    throw DatasetError(where(line_number) + "criterion variable '" + inst.criterion.variable +
                       "' does not occur on line " + std::to_string(inst.criterion.line));
  }
  for (std::size_t i = 0; i < inst.gold_lines.size(); ++i) {
    const int g = inst.gold_lines[i];
    if (g < 1 || g > n_lines || (i > 0 && g <= inst.gold_lines[i - 1])) {
      throw DatasetError(where(line_number) +
                         "gold_lines must be strictly increasing line numbers of the program");
    }
  }
  if (inst.corruption == Corruption::none &&
      token_texts(inst.gold_text) != token_texts(render_lines(inst.program, inst.gold_lines))) {
    throw DatasetError(where(line_number) + "gold_text does not match gold_lines of the program");
  }
  return inst;
}

void save_jsonl(const std::filesystem::path& path, const std::vector<SliceInstance>& instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
  for (const auto& inst : instances) out << to_json_line(inst) << '\n';
  if (!out) throw DatasetError("write to " + path.string() + " failed");
}

std::vector<SliceInstance> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::vector<SliceInstance> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(from_json_line(line, number));
    } catch (const DatasetError& e) {
      throw DatasetError(path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace seqslice::corpus
