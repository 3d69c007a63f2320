#include <algorithm>
#include <array>
#include <charconv>
#include <map>

#include "seqslice/corpus.hpp"
#include "seqslice/minilang.hpp"

namespace seqslice::corpus {

namespace {

constexpr std::array<std::string_view, kReservedCount> kReservedNames = {
    "<pad>",       "<s>",          "</s>",    "<unk>",   "<line_number>",
    "</line_number>", "<code>",    "</code>", "<criterion>", "</criterion>",
    "<slice>",     "</slice>",     "<nl>"};

}  // namespace

Vocabulary::Vocabulary() {
  for (auto name : kReservedNames) add(std::string(name));
  for (const auto& s : lang::fixed_spellings()) add(s);
  for (int i = 0; i <= kMaxInteger; ++i) add(std::to_string(i));
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

int Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::build(const std::vector<SliceInstance>& training, int min_count) {
  std::map<std::string, int> counts;
  for (const auto& inst : training) {
    for (const auto& t : lang::tokenize(inst.program)) {
      if (t.kind == lang::TokenKind::identifier) ++counts[t.text];
    }
  }
  std::vector<std::pair<std::string, int>> frequent;
  for (const auto& [text, n] : counts) {
    if (n >= min_count) frequent.emplace_back(text, n);
  }
  std::stable_sort(frequent.begin(), frequent.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [text, n] : frequent) v.add(text);
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary base;
  if (tokens.size() < base.tokens_.size() ||
      !std::equal(base.tokens_.begin(), base.tokens_.end(), tokens.begin())) {
    throw DataError("vocabulary does not start with the fixed reserved/language tokens");
  }
  for (std::size_t i = base.tokens_.size(); i < tokens.size(); ++i) {
    if (base.contains(tokens[i])) throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
    base.add(tokens[i]);
  }
  return base;
}

namespace {

// Token stream before id assignment. `reserved` >= 0 marks a reserved id, so
// no program token can be mistaken for a marker.
struct Piece {
  int reserved = -1;
  std::string text;
};

class Encoder {
 public:
  Encoder(const Vocabulary& vocab, EncodedInput& out) : vocab_(vocab), out_(out) {}

  void push(const Piece& p) {
    if (p.reserved >= 0) {
      out_.ids.push_back(p.reserved);
      out_.ext_ids.push_back(p.reserved);
      return;
    }
    const int id = vocab_.find(p.text);
    if (id >= 0) {
      out_.ids.push_back(id);
      out_.ext_ids.push_back(id);
      return;
    }
    auto it = std::find(out_.oov.begin(), out_.oov.end(), p.text);
    const int k = static_cast<int>(it - out_.oov.begin());
    if (it == out_.oov.end()) out_.oov.push_back(p.text);
    out_.ids.push_back(kUnk);
    out_.ext_ids.push_back(vocab_.size() + k);
  }

 private:
  const Vocabulary& vocab_;
  EncodedInput& out_;
};

std::vector<std::vector<Piece>> statement_rows(std::string_view text) {
  std::vector<std::vector<Piece>> rows;
  for (const auto& s : lang::split_statements(lang::tokenize(text))) {
    std::vector<Piece> row;
    row.push_back({-1, std::to_string(s.line)});
    row.push_back({-1, ":"});
    for (const auto& t : s.tokens) row.push_back({-1, t.text});
    row.push_back({kNewline, {}});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

EncodedInput encode_input(const SliceInstance& instance, const Vocabulary& vocab,
                          std::size_t max_len) {
  std::vector<Piece> head = {
      {kLineNumberOpen, {}},  {-1, std::to_string(instance.criterion.line)},
      {kLineNumberClose, {}}, {kCriterionOpen, {}},
      {-1, instance.criterion.variable}, {kCriterionClose, {}},
      {kCodeOpen, {}}};
  if (max_len < head.size() + 1) {
    throw DataError("max source length " + std::to_string(max_len) + " cannot hold the header");
  }
  EncodedInput out;
  Encoder enc(vocab, out);
  for (const auto& p : head) enc.push(p);
  std::size_t used = head.size() + 1;
  for (const auto& row : statement_rows(instance.program)) {
    if (used + row.size() > max_len) {
      out.truncated = true;
      break;
    }
    used += row.size();
    for (const auto& p : row) enc.push(p);
  }
  enc.push({kCodeClose, {}});
  return out;
}

std::vector<int> encode_target(const SliceInstance& instance, const Vocabulary& vocab,
                               const EncodedInput& input, std::size_t max_len, bool unk_oov) {
  auto resolve = [&](const Piece& p) {
    if (p.reserved >= 0) return p.reserved;
    const int id = vocab.find(p.text);
    if (id >= 0) return id;
    if (unk_oov) return static_cast<int>(kUnk);
    auto it = std::find(input.oov.begin(), input.oov.end(), p.text);
    if (it == input.oov.end()) {
      throw DataError("gold token '" + p.text +
                      "' is neither in the vocabulary nor in the source");
    }
    return vocab.size() + static_cast<int>(it - input.oov.begin());
  };
  std::vector<int> out{kSliceOpen};
  for (const auto& row : lang::split_lines(instance.gold_text)) {
    // Gold rows already carry their "L :" prefix.
    std::vector<Piece> pieces;
    for (const auto& t : lang::tokenize(row)) pieces.push_back({-1, t.text});
    if (pieces.empty()) continue;
    pieces.push_back({kNewline, {}});
    if (out.size() + pieces.size() + 2 > max_len) break;
    for (const auto& p : pieces) out.push_back(resolve(p));
  }
  out.push_back(kSliceClose);
  out.push_back(kEos);
  return out;
}

std::string id_to_token(int id, const Vocabulary& vocab, const std::vector<std::string>& oov) {
  if (id >= 0 && id < vocab.size()) return vocab.token(id);
  const auto k = static_cast<std::size_t>(id - vocab.size());
  if (id >= vocab.size() && k < oov.size()) return oov[k];
  return vocab.token(kUnk);
}

std::string decode_slice_text(const std::vector<int>& ids, const Vocabulary& vocab,
                              const std::vector<std::string>& oov) {
  std::size_t start = 0;
  auto open = std::find(ids.begin(), ids.end(), static_cast<int>(kSliceOpen));
  if (open != ids.end()) start = static_cast<std::size_t>(open - ids.begin()) + 1;
  std::vector<std::string> rows;
  std::string row;
  auto flush = [&] {
    if (!row.empty()) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = start; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id == kSliceClose || id == kEos) break;
    if (id == kBos || id == kPad || id == kSliceOpen) continue;
    if (id == kNewline) {
      flush();
      continue;
    }
    if (!row.empty()) row += ' ';
    row += id_to_token(id, vocab, oov);
  }
  flush();
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += '\n';
    out += rows[i];
  }
  return out;
}

std::vector<int> slice_text_lines(std::string_view slice_text) {
  std::vector<int> out;
  for (const auto& row : lang::split_lines(slice_text)) {
    std::size_t i = row.find_first_not_of(' ');
    if (i == std::string::npos) continue;
    int value = 0;
    auto [ptr, ec] = std::from_chars(row.data() + i, row.data() + row.size(), value);
    if (ec != std::errc() || ptr == row.data() + i) continue;
    std::string_view rest(ptr, static_cast<std::size_t>(row.data() + row.size() - ptr));
    const auto colon = rest.find_first_not_of(' ');
    if (colon == std::string_view::npos || rest[colon] != ':') continue;
    out.push_back(value);
  }
  return out;
}

}  // namespace seqslice::corpus
