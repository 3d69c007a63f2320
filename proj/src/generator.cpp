#include <algorithm>
#include <array>
#include <set>

#include "seqslice/corpus.hpp"
#include "seqslice/minilang.hpp"
#include "seqslice/random.hpp"

namespace seqslice::corpus {

namespace {

constexpr std::array<std::string_view, 10> kMethodNames = {
    "solve", "compute", "run", "calc", "process", "check", "count", "find", "update", "eval"};

constexpr std::array<std::string_view, 6> kRelations = {"<", "<=", ">", ">=", "==", "!="};
constexpr std::array<std::string_view, 3> kArith = {"+", "-", "*"};

using Line = std::vector<std::string>;

class Generator {
 public:
  Generator(std::uint64_t seed, const GenConfig& cfg) : rng_(seed), cfg_(cfg) {}

  std::string run() {
    const int total = 12 + static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(
                                                                    std::max(1, cfg_.max_lines - 11))));
    const std::string type = bernoulli(rng_, 0.8) ? "int" : "long";
    std::string method(kMethodNames[uniform_index(rng_, kMethodNames.size())]);
    taken_.insert(method);
    emit({type, method, "(", ")", "{"});
    scopes_.emplace_back();
    const bool with_return = bernoulli(rng_, 0.9);
    // Two lines are reserved for the closing brace and the optional return.
    int budget = total - 2 - (with_return ? 1 : 0);
    declaration(true);
    --budget;
    if (budget > 4 && bernoulli(rng_, 0.6)) {
      declaration(false);
      --budget;
    }
    sequence(budget, 0);
    if (with_return) emit({"return", pick_var(), ";"});
    emit({"}"});
    std::string out;
    for (const auto& l : lines_) {
      for (std::size_t i = 0; i < l.size(); ++i) {
        if (i) out += ' ';
        out += l[i];
      }
      out += '\n';
    }
    return out;
  }

 private:
  Rng rng_;
  GenConfig cfg_;
  std::vector<Line> lines_;
  std::vector<std::vector<std::string>> scopes_;
  std::set<std::string> taken_;
  int declared_ = 0;

  void emit(Line l) { lines_.push_back(std::move(l)); }

  std::vector<std::string> visible() const {
    std::vector<std::string> out;
    for (const auto& s : scopes_) out.insert(out.end(), s.begin(), s.end());
    return out;
  }

  std::string pick_var() {
    const auto vars = visible();
    return vars[uniform_index(rng_, vars.size())];
  }

  std::string fresh_name() {
    for (;;) {
      std::string name;
      if (bernoulli(rng_, cfg_.common_name_rate)) {
        const auto& pool = common_names();
        name = pool[uniform_index(rng_, pool.size())];
      } else {
        const std::size_t len = 3 + uniform_index(rng_, 8);
        for (std::size_t i = 0; i < len; ++i) {
          name += static_cast<char>('a' + uniform_index(rng_, 26));
        }
        if (lang::is_keyword(name)) continue;
        const auto& pool = common_names();
        if (std::find(pool.begin(), pool.end(), name) != pool.end()) continue;
      }
      if (taken_.insert(name).second) return name;
    }
  }

  std::string literal() { return std::to_string(uniform_index(rng_, 21)); }

  // A variable other than `avoid` when one exists, otherwise a literal.
  std::string atom(const std::string& avoid = {}) {
    auto vars = visible();
    vars.erase(std::remove(vars.begin(), vars.end(), avoid), vars.end());
    if (vars.empty() || bernoulli(rng_, 0.3)) return literal();
    return vars[uniform_index(rng_, vars.size())];
  }

  void expression(Line& l, const std::string& target = {}) {
    l.push_back(atom(target));
    if (bernoulli(rng_, 0.12)) {
      l.emplace_back(kArith[uniform_index(rng_, kArith.size())]);
      l.push_back(atom());
    }
  }

  void condition(Line& l) {
    const std::string lhs = pick_var();
    l.push_back(lhs);
    l.emplace_back(kRelations[uniform_index(rng_, kRelations.size())]);
    l.push_back(atom(lhs));
  }

  void declaration(bool initialized) {
    Line l{bernoulli(rng_, 0.85) ? "int" : "long"};
    const std::string name = fresh_name();
    l.push_back(name);
    if (initialized || bernoulli(rng_, 0.3)) {
      l.emplace_back("=");
      expression(l);
    }
    l.emplace_back(";");
    emit(std::move(l));
    scopes_.back().push_back(name);
    ++declared_;
  }

  void assignment() {
    const std::string target = pick_var();
    Line l{target, "="};
    expression(l, target);
    l.emplace_back(";");
    emit(std::move(l));
  }

  void body(int budget, int depth) {
    scopes_.emplace_back();
    sequence(budget, depth);
    scopes_.pop_back();
  }

  // Emits statements totalling exactly `budget` lines.
  void sequence(int budget, int depth) {
    while (budget > 0) {
      const bool can_nest = depth < cfg_.nesting_depth && budget >= 3;
      const bool can_declare = declared_ < cfg_.var_pool;
      std::array<double, 6> w = {
          can_declare ? 2.5 : 0.0,  // declaration
          3.0,                      // assignment
          can_nest ? 1.8 : 0.0,     // if
          can_nest && budget >= 6 ? 3.5 : 0.0,  // if-else
          can_nest ? 1.2 : 0.0,     // while
          can_nest && can_declare ? 0.15 : 0.0,  // for
      };
      std::discrete_distribution<int> choose(w.begin(), w.end());
      const int choice = choose(rng_);
      switch (choice) {
        case 0:
          declaration(false);
          budget -= 1;
          break;
        case 1:
          assignment();
          budget -= 1;
          break;
        case 2:
        case 4: {
          const int inner = inner_budget(budget - 2);
          Line h{choice == 2 ? "if" : "while", "("};
          condition(h);
          h.emplace_back(")");
          h.emplace_back("{");
          emit(std::move(h));
          body(inner, depth + 1);
          emit({"}"});
          budget -= inner + 2;
          break;
        }
        case 3: {
          const int avail = budget - 4;
          const int then_lines = std::max(1, inner_budget(avail - 1));
          const int else_lines = std::max(1, inner_budget(avail - then_lines));
          Line h{"if", "("};
          condition(h);
          h.emplace_back(")");
          h.emplace_back("{");
          emit(std::move(h));
          body(then_lines, depth + 1);
          emit({"}"});
          emit({"else", "{"});
          body(else_lines, depth + 1);
          emit({"}"});
          budget -= then_lines + else_lines + 4;
          break;
        }
        case 5: {
          const int inner = inner_budget(budget - 2);
          scopes_.emplace_back();
          const std::string i = fresh_name();
          ++declared_;
          const std::string bound = atom();
          emit({"for", "(", "int", i, "=", "0", ";", i, "<", bound, ";", i, "=", i, "+", "1", ")",
                "{"});
          scopes_.back().push_back(i);
          body(inner, depth + 1);
          scopes_.pop_back();
          emit({"}"});
          budget -= inner + 2;
          break;
        }
      }
    }
  }

  // Mostly one- or two-line bodies, occasionally room for a nested block.
  int inner_budget(int avail) {
    static constexpr std::array<double, 5> kWeights = {0.5, 0.3, 0.12, 0.08, 0.0};
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    int size = 1;
    for (double acc = kWeights[0]; u >= acc && size < 4; acc += kWeights[static_cast<std::size_t>(size)]) ++size;
    return std::max(1, std::min(size, avail));
  }
};

}  // namespace

const std::vector<std::string>& common_names() {
  static const std::vector<std::string> names = {
      "a",     "b",      "c",     "n",     "m",      "i",      "j",     "k",     "x",
      "y",     "z",      "sum",   "count", "total",  "result", "temp",  "max",   "min",
      "value", "index",  "len",   "size",  "num",    "left",   "right", "mid",   "low",
      "high",  "prev",   "next",  "cur",   "step",   "acc",    "diff",  "res",   "ans",
      "tmp",   "flag",   "limit", "base",  "delta",  "width",  "height", "start", "end",
      "offset", "factor", "score", "level", "depth"};
  return names;
}

std::string generate_program(std::uint64_t seed, const GenConfig& config) {
  if (config.max_lines < 12 || config.var_pool < 1 || config.nesting_depth < 0) {
    throw ArgumentError("generator config needs max_lines >= 12, var_pool >= 1, nesting_depth >= 0");
  }
  return Generator(seed, config).run();
}

}  // namespace seqslice::corpus
