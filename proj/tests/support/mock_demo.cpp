#include "mock_demo.hpp"

#include <algorithm>
#include <stdexcept>

namespace seqslice::testing {

const char* const kMockProgram =
    "long slice ( ) {\n"
    "int n = 5 ;\n"
    "int one = 0 ;\n"
    "int five = 0 ;\n"
    "int ten = n ;\n"
    "int y = 7 ;\n"
    "int z = 2 ;\n"
    "if ( one * 1 + five * 5 + ten * 10 > y ) {\n"
    "y = z ;\n"
    "}\n"
    "long Codepoint = 97 + y ;\n"
    "return Codepoint ;\n"
    "}\n";

namespace {

constexpr int kTailRepeats = 6;

corpus::Vocabulary demo_vocab() {
  corpus::Vocabulary v;
  for (const char* name : {"slice", "n", "one", "five", "ten", "y", "z", "keta"}) v.add(name);
  return v;
}

std::vector<int> ids_of(const corpus::Vocabulary& v, std::initializer_list<const char*> words) {
  std::vector<int> out;
  for (const char* w : words) {
    const int id = v.find(w);
    if (id < 0) throw std::logic_error(std::string("demo vocabulary lacks ") + w);
    out.push_back(id);
  }
  return out;
}

ScriptedModel::Path path_of(std::vector<int> tokens, std::size_t branch, double branch_logit) {
  std::vector<double> logits(tokens.size(), 0.0);
  if (branch < logits.size()) logits[branch] = branch_logit;
  return {std::move(tokens), std::move(logits)};
}

}  // namespace

MockDemo overgeneration_demo() {
  corpus::Vocabulary vocab = demo_vocab();
  const auto inst = corpus::make_instance(kMockProgram, oracle::SliceCriterion{"Codepoint", 11});
  decode::DecodeInput input{corpus::encode_input(inst, vocab), inst.program};
  const auto gold = corpus::encode_target(inst, vocab, input.encoded);
  const int codepoint = vocab.size();  // first OOV: the criterion name

  // Row 8 closes its condition at the first ')' after "> y".
  const int gt = vocab.find(">");
  const auto after_gt = std::find(gold.begin(), gold.end(), gt);
  const auto close = std::find(after_gt, gold.end(), vocab.find(")"));
  const auto branch = static_cast<std::size_t>(close - gold.begin());
  std::vector<int> tail(gold.begin(), close);
  for (int r = 0; r < kTailRepeats; ++r) {
    const auto chunk = ids_of(vocab, {"*", "z", "*", "ten", "*", "10", "*", "y"});
    tail.insert(tail.end(), chunk.begin(), chunk.end());
  }
  const auto end = ids_of(vocab, {")", "{"});
  tail.insert(tail.end(), end.begin(), end.end());
  tail.push_back(corpus::kNewline);

  // The criterion's declaration row is the first place Codepoint is emitted.
  const auto cp = std::find(gold.begin(), gold.end(), codepoint);
  const auto keta_at = static_cast<std::size_t>(cp - gold.begin());
  std::vector<int> keta(gold);
  keta[keta_at] = vocab.find("keta");

  ScriptedModel model({path_of(gold, gold.size(), 0.0), path_of(tail, branch, 2.0),
                       path_of(keta, keta_at, 3.0)},
                      vocab.size() + 64);
  return {inst, vocab, input, gold, tail, keta, std::move(model)};
}

}  // namespace seqslice::testing
