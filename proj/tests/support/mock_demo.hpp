#pragma once

// Scripted over-generation case: a small program whose slice for Codepoint
// the mock knows, plus two tempting wrong branches. One runs the if header on
// with a repeating multiplication tail; the other swaps the criterion name for
// "keta", a vocabulary word that never occurs in the input.

#include <string>
#include <vector>

#include "oracles.hpp"

namespace seqslice::testing {

struct MockDemo {
  corpus::SliceInstance instance;
  corpus::Vocabulary vocab;
  decode::DecodeInput input;
  std::vector<int> gold;        // encoded gold target, EOS included
  std::vector<int> tail_path;   // ends with the <nl> that closes the run-on header
  std::vector<int> keta_path;
  ScriptedModel model;
};

extern const char* const kMockProgram;

MockDemo overgeneration_demo();

}  // namespace seqslice::testing
