#pragma once

// Synthetic slicing corpus: program generator, instance labelling, the three
// corruption operators, vocabulary and input/target encoding, JSONL storage.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqslice/error.hpp"
#include "seqslice/oracle.hpp"

namespace seqslice::corpus {

SEQSLICE_DEFINE_ERROR(GenerationError, false);
SEQSLICE_DEFINE_ERROR(ArgumentError, true);
SEQSLICE_DEFINE_ERROR(DatasetError, true);
SEQSLICE_DEFINE_ERROR(DataError, true);

struct GenConfig {
  /// Upper bound on rendered lines, method header and closing brace included.
  int max_lines = 24;
  /// Most variables declared in one program.
  int var_pool = 6;
  int nesting_depth = 2;
  /// Share of identifiers drawn from the common-name list (the rest are
  /// random 3-10 letter names that stay out of vocabulary).
  double common_name_rate = 0.6;
};

/// Deterministic in (seed, config). Output is canonical: one statement per
/// line, tokens separated by single spaces, '\n' after every line.
std::string generate_program(std::uint64_t seed, const GenConfig& config = {});

/// The 50 frequent identifiers the generator draws from.
const std::vector<std::string>& common_names();

enum class Corruption { none, missing_class, missing_semicolons, unmatched_braces };

std::string_view to_string(Corruption kind);
/// Throws ArgumentError for an unknown name.
Corruption corruption_from_string(std::string_view name);

struct SliceInstance {
  std::string program;
  oracle::SliceCriterion criterion;
  std::vector<int> gold_lines;
  std::string gold_text;
  Corruption corruption = Corruption::none;

  bool operator==(const SliceInstance&) const = default;
};

/// Renders the given lines of `program` as "L : tokens" rows.
std::string render_lines(std::string_view program, const std::vector<int>& lines);

/// Criterion drawn uniformly from the distinct (variable, line) occurrences
/// on statement lines; gold slice from the oracle.
SliceInstance make_instance(const std::string& program, std::uint64_t seed);
SliceInstance make_instance(const std::string& program, const oracle::SliceCriterion& criterion);

/// Applies one corruption to an uncorrupted instance; line numbers of the
/// criterion and gold slice follow the edit.
SliceInstance corrupt(const SliceInstance& instance, Corruption kind, std::uint64_t seed);

struct SplitSizes {
  std::size_t train = 3000;
  std::size_t valid = 350;
  std::size_t test = 870;
};

struct DatasetSplit {
  std::vector<SliceInstance> train;
  std::vector<SliceInstance> valid;
  std::vector<SliceInstance> test;
};

/// Programs are distinct across (and within) the three lists.
DatasetSplit generate_split(std::uint64_t seed, const SplitSizes& sizes = {},
                            const GenConfig& config = {});

std::string to_json_line(const SliceInstance& instance);
/// `line_number` is only used in error messages.
SliceInstance from_json_line(std::string_view line, std::size_t line_number = 1);
void save_jsonl(const std::filesystem::path& path, const std::vector<SliceInstance>& instances);
std::vector<SliceInstance> load_jsonl(const std::filesystem::path& path);

// ---- vocabulary -----------------------------------------------------------

enum Reserved : int {
  kPad = 0,
  kBos = 1,
  kEos = 2,
  kUnk = 3,
  kLineNumberOpen = 4,
  kLineNumberClose = 5,
  kCodeOpen = 6,
  kCodeClose = 7,
  kCriterionOpen = 8,
  kCriterionClose = 9,
  kSliceOpen = 10,
  kSliceClose = 11,
  kNewline = 12,
  kReservedCount = 13,
};

/// Token id map. Ids 0-12 are the reserved ids above; then every fixed
/// spelling of the language, the integers 0-255 as whole tokens, and the
/// training identifiers seen at least `min_count` times.
class Vocabulary {
 public:
  static constexpr int kMaxInteger = 255;

  Vocabulary();
  static Vocabulary build(const std::vector<SliceInstance>& training, int min_count = 5);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  /// -1 when absent.
  int find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) >= 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void add(const std::string& token);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct EncodedInput {
  /// In-vocabulary ids; OOV tokens appear as UNK.
  std::vector<int> ids;
  /// Same positions over the extended vocabulary: OOV tokens carry |V| + k.
  std::vector<int> ext_ids;
  /// k-th entry is the spelling of extended id |V| + k, first occurrence order.
  std::vector<std::string> oov;
  /// Set when statements were dropped to fit the length limit.
  bool truncated = false;
};

EncodedInput encode_input(const SliceInstance& instance, const Vocabulary& vocab,
                          std::size_t max_len = 256);

/// Gold target over the extended vocabulary: <slice> rows... </slice> EOS.
/// OOV tokens resolve through `input.oov`; a gold token that is neither in
/// the vocabulary nor in the source throws DataError. With `unk_oov` every
/// OOV token becomes UNK instead (for models without a copy path).
std::vector<int> encode_target(const SliceInstance& instance, const Vocabulary& vocab,
                               const EncodedInput& input, std::size_t max_len = 256,
                               bool unk_oov = false);

/// Spelling of an extended id.
std::string id_to_token(int id, const Vocabulary& vocab, const std::vector<std::string>& oov);

/// Slice text from emitted ids: tokens between <slice> and </slice> (or EOS),
/// rows split at <nl>, joined with '\n'.
std::string decode_slice_text(const std::vector<int>& ids, const Vocabulary& vocab,
                              const std::vector<std::string>& oov);

/// Line numbers of the rows of slice text ("L : ..."); rows without a
/// numeric prefix are skipped.
std::vector<int> slice_text_lines(std::string_view slice_text);

}  // namespace seqslice::corpus
