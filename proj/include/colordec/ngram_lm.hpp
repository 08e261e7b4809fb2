/* Copyright 2026 The colordec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Backoff n-gram language models over word tokens, read from and written to
// ARPA text. Models are immutable once built and can be shared by any number
// of decoders; the per-hypothesis query context lives in LmState.

#ifndef COLORDEC_NGRAM_LM_HPP_
#define COLORDEC_NGRAM_LM_HPP_

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "colordec/common.hpp"

namespace colordec {

using WordId = std::uint32_t;
inline constexpr WordId kUnknownWord = std::numeric_limits<WordId>::max();
inline constexpr int kMaxOrder = 8;

// The most recent (max_order - 1) words seen by the model, oldest first.
class LmState {
 public:
  LmState() = default;

  std::span<const WordId> context() const { return {words_.data(), size_}; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  // Appends `word`, keeping at most `max_context` words.
  void push(WordId word, std::size_t max_context) {
    if (max_context == 0) return;
    if (size_ == max_context) {
      std::copy(words_.begin() + 1, words_.begin() + size_, words_.begin());
      --size_;
    }
    words_[size_++] = word;
  }

  friend bool operator==(const LmState& a, const LmState& b) {
    return std::equal(a.context().begin(), a.context().end(),
                      b.context().begin(), b.context().end());
  }

 private:
  std::array<WordId, kMaxOrder - 1> words_{};
  std::size_t size_ = 0;
};

struct WordScore {
  double log10_prob = 0.0;
  bool oov = false;
};

// Splits a colored token `<color>:<word>`. Tokens without a numeric prefix
// followed by ':' are uncolored.
inline std::pair<std::optional<ColorId>, std::string_view> split_colored_token(
    std::string_view token) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos || colon == 0 ||
      colon + 1 == token.size()) {
    return {std::nullopt, token};
  }
  std::uint32_t color = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + colon, color);
  if (ec != std::errc() || ptr != token.data() + colon) {
    return {std::nullopt, token};
  }
  return {ColorId(color), token.substr(colon + 1)};
}

inline std::string colored_token(ColorId color, std::string_view word) {
  std::string out = std::to_string(color.value);
  out += ':';
  out += word;
  return out;
}

// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

class NGramModel {
 public:
  struct Entry {
    std::vector<WordId> words;
    double log10_prob = 0.0;
    std::optional<double> backoff_log10;
  };

  NGramModel() = default;

  int max_order() const { return static_cast<int>(orders_.size()); }
  std::size_t vocabulary_size() const { return vocab_.size(); }
  const std::string& word(WordId id) const { return vocab_[id]; }
  std::optional<ColorId> color(WordId id) const { return colors_[id]; }

  std::optional<WordId> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  WordId id_or_unknown(std::string_view word) const {
    return find(word).value_or(kUnknownWord);
  }

  // Entries of one order (1-based) in insertion order.
  std::span<const Entry> entries(int order) const {
    return orders_[order - 1].entries;
  }

  const Entry* lookup(std::span<const WordId> words) const {
    if (words.empty() || static_cast<int>(words.size()) > max_order()) {
      return nullptr;
    }
    const Order& ord = orders_[words.size() - 1];
    auto it = ord.lookup.find(make_key(words));
    return it == ord.lookup.end() ? nullptr : &ord.entries[it->second];
  }

  // Adds an n-gram, interning unigram tokens. Higher-order n-grams must only
  // use tokens that already have a unigram. Returns false on duplicates.
  bool add_ngram(std::span<const std::string> tokens, double log10_prob,
                 std::optional<double> backoff_log10) {
    const std::size_t n = tokens.size();
    if (n == 0 || n > static_cast<std::size_t>(kMaxOrder)) {
      throw InvalidConfig("n-gram order out of range");
    }
    if (orders_.size() < n) orders_.resize(n);
    std::vector<WordId> ids;
    ids.reserve(n);
    for (const auto& tok : tokens) {
      auto id = find(tok);
      if (!id) {
        if (n != 1) throw MalformedArpa("token '" + tok + "' has no unigram");
        id = intern(tok);
      }
      ids.push_back(*id);
    }
    Order& ord = orders_[n - 1];
    auto [it, inserted] = ord.lookup.emplace(make_key(ids), ord.entries.size());
    if (!inserted) return false;
    ord.entries.push_back(Entry{std::move(ids), log10_prob, backoff_log10});
    return true;
  }

  // log10 P(word | state) by longest-match backoff. OOV words get
  // `unknown_penalty`; their id still enters the next state's context.
  WordScore score_word(const LmState& state, WordId word, LmState* next,
                       double unknown_penalty) const {
    if (next != nullptr) {
      *next = state;
      next->push(word, static_cast<std::size_t>(std::max(max_order() - 1, 0)));
    }
    if (word == kUnknownWord || word >= vocab_.size()) {
      return {unknown_penalty, true};
    }
    std::array<WordId, kMaxOrder> buf{};
    const auto ctx = state.context();
    const std::size_t usable =
        std::min<std::size_t>(ctx.size(), std::max(max_order() - 1, 0));
    double backoff = 0.0;
    for (std::size_t k = usable + 1; k-- > 0;) {
      // Try (last k context words, word).
      std::copy(ctx.end() - k, ctx.end(), buf.begin());
      buf[k] = word;
      if (const Entry* e = lookup({buf.data(), k + 1})) {
        return {e->log10_prob + backoff, false};
      }
      if (k > 0) {
        if (const Entry* c = lookup({buf.data(), k})) {
          backoff += c->backoff_log10.value_or(0.0);
        }
      }
    }
    // Unreachable for in-vocabulary words: every word has a unigram.
    return {unknown_penalty, true};
  }

  WordScore score_word(const LmState& state, std::string_view word,
                       LmState* next, double unknown_penalty) const {
    return score_word(state, id_or_unknown(word), next, unknown_penalty);
  }

  double sentence_logprob(std::span<const std::string> words,
                          double unknown_penalty) const {
    LmState state;
    double total = 0.0;
    for (const auto& w : words) {
      LmState next;
      total += score_word(state, w, &next, unknown_penalty).log10_prob;
      state = next;
    }
    return total;
  }

  // Checks ARPA well-formedness: every n-gram's context prefix is present,
  // log10 probabilities are <= 0, and the highest order has no backoffs.
  void validate() const {
    for (int n = 1; n <= max_order(); ++n) {
      for (const Entry& e : entries(n)) {
        if (!(e.log10_prob <= 0.0)) {
          throw MalformedArpa("positive or NaN log10 probability for '" +
                              join(e.words) + "'");
        }
        if (n == max_order() && e.backoff_log10) {
          throw MalformedArpa("backoff weight on highest order n-gram '" +
                              join(e.words) + "'");
        }
        if (n > 1 && lookup({e.words.data(), e.words.size() - 1}) == nullptr) {
          throw MalformedArpa("missing context prefix for '" + join(e.words) +
                              "'");
        }
      }
    }
  }

  void write_arpa(std::ostream& os) const {
    os << "\\data\\\n";
    for (int n = 1; n <= max_order(); ++n) {
      os << "ngram " << n << '=' << entries(n).size() << '\n';
    }
    for (int n = 1; n <= max_order(); ++n) {
      os << "\n\\" << n << "-grams:\n";
      for (const Entry& e : entries(n)) {
        os << format_double(e.log10_prob) << '\t' << join(e.words);
        if (e.backoff_log10) os << '\t' << format_double(*e.backoff_log10);
        os << '\n';
      }
    }
    os << "\n\\end\\\n";
  }

  std::string to_arpa() const {
    std::ostringstream os;
    write_arpa(os);
    return os.str();
  }

 private:
  struct Order {
    std::vector<Entry> entries;
    std::unordered_map<std::u32string, std::size_t> lookup;
  };

  static std::u32string make_key(std::span<const WordId> words) {
    std::u32string key(words.size(), U'\0');
    for (std::size_t i = 0; i < words.size(); ++i) {
      key[i] = static_cast<char32_t>(words[i]);
    }
    return key;
  }

  WordId intern(const std::string& tok) {
    const auto id = static_cast<WordId>(vocab_.size());
    vocab_.push_back(tok);
    colors_.push_back(split_colored_token(tok).first);
    index_.emplace(tok, id);
    return id;
  }

  std::string join(std::span<const WordId> words) const {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out += ' ';
      out += vocab_[words[i]];
    }
    return out;
  }

  std::vector<std::string> vocab_;
  std::vector<std::optional<ColorId>> colors_;
  std::unordered_map<std::string, WordId> index_;
  std::vector<Order> orders_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline NGramModel parse_arpa(std::istream& in) {
  NGramModel model;
  std::vector<std::size_t> declared;
  std::string raw;
  std::size_t line_no = 0;
  enum class Phase { kPreamble, kHeader, kSection, kDone } phase =
      Phase::kPreamble;
  int order = 0;
  std::size_t seen_in_section = 0;

  auto fail = [&](const std::string& what) -> MalformedArpa {
    return MalformedArpa("line " + std::to_string(line_no) + ": " + what);
  };
  auto close_section = [&]() {
    if (order > 0 && seen_in_section != declared[order - 1]) {
      throw fail("section \\" + std::to_string(order) + "-grams: has " +
                 std::to_string(seen_in_section) + " entries, header says " +
                 std::to_string(declared[order - 1]));
    }
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.remove_suffix(1);
    }
    if (line.empty()) continue;
    if (phase == Phase::kDone) throw fail("content after \\end\\");

    if (line == "\\data\\") {
      if (phase != Phase::kPreamble) throw fail("duplicate \\data\\");
      phase = Phase::kHeader;
      continue;
    }
    if (phase == Phase::kPreamble) continue;  // free text before the data header

    if (line == "\\end\\") {
      close_section();
      if (order != static_cast<int>(declared.size())) {
        throw fail("missing \\" + std::to_string(order + 1) + "-grams: section");
      }
      phase = Phase::kDone;
      continue;
    }
    if (line.front() == '\\') {
      // \N-grams:
      const auto dash = line.find("-grams:");
      if (dash == std::string_view::npos || dash + 7 != line.size()) {
        throw fail("unrecognised section marker '" + std::string(line) + "'");
      }
      int n = 0;
      const auto [ptr, ec] = std::from_chars(line.data() + 1, line.data() + dash, n);
      if (ec != std::errc() || ptr != line.data() + dash) {
        throw fail("unrecognised section marker '" + std::string(line) + "'");
      }
      if (phase == Phase::kHeader && declared.empty()) {
        throw fail("no ngram counts in header");
      }
      close_section();
      if (n != order + 1 || n > static_cast<int>(declared.size())) {
        throw fail("unexpected section \\" + std::to_string(n) + "-grams:");
      }
      order = n;
      seen_in_section = 0;
      phase = Phase::kSection;
      continue;
    }
    if (phase == Phase::kHeader) {
      if (!line.starts_with("ngram ")) throw fail("expected 'ngram N=count'");
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw fail("expected 'ngram N=count'");
      int n = 0;
      std::size_t count = 0;
      const char* b = line.data() + 6;
      const auto r1 = std::from_chars(b, line.data() + eq, n);
      const auto r2 =
          std::from_chars(line.data() + eq + 1, line.data() + line.size(), count);
      if (r1.ec != std::errc() || r1.ptr != line.data() + eq ||
          r2.ec != std::errc() || r2.ptr != line.data() + line.size() ||
          n != static_cast<int>(declared.size()) + 1) {
        throw fail("bad ngram count line '" + std::string(line) + "'");
      }
      if (n > kMaxOrder) throw fail("order exceeds " + std::to_string(kMaxOrder));
      declared.push_back(count);
      continue;
    }
    // n-gram line
    const auto fields = detail::split_ws(line);
    const std::size_t n = static_cast<std::size_t>(order);
    if (fields.size() != n + 1 && fields.size() != n + 2) {
      throw fail("expected " + std::to_string(n) + " tokens");
    }
    const auto prob = detail::parse_double(fields[0]);
    if (!prob) throw fail("non-numeric probability '" + std::string(fields[0]) + "'");
    if (!(*prob <= 0.0)) throw fail("log10 probability must be <= 0");
    std::optional<double> backoff;
    if (fields.size() == n + 2) {
      backoff = detail::parse_double(fields[n + 1]);
      if (!backoff) throw fail("non-numeric backoff '" + std::string(fields[n + 1]) + "'");
      if (order == static_cast<int>(declared.size())) {
        throw fail("backoff weight on highest order n-gram");
      }
    }
    std::vector<std::string> tokens(fields.begin() + 1, fields.begin() + 1 + n);
    try {
      if (!model.add_ngram(tokens, *prob, backoff)) throw fail("duplicate n-gram");
    } catch (const MalformedArpa& e) {
      throw fail(e.what());
    }
    ++seen_in_section;
  }
  if (phase != Phase::kDone) {
    throw MalformedArpa("line " + std::to_string(line_no) +
                        ": missing \\end\\ (or \\data\\)");
  }
  try {
    model.validate();
  } catch (const MalformedArpa& e) {
    throw MalformedArpa(std::string("after line ") + std::to_string(line_no) +
                        ": " + e.what());
  }
  return model;
}

inline NGramModel parse_arpa(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_arpa(in);
}

inline NGramModel read_arpa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open language model '" + path + "'");
  return parse_arpa(in);
}

inline void write_arpa_file(const NGramModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + path + "' for writing");
  model.write_arpa(os);
  if (!os) throw IoFailure("failed writing '" + path + "'");
}

struct ColoredModelRef {
  const NGramModel* model = nullptr;
  ColorId color;
};

// Tags every token of each model with its color and appends all n-grams into
// one model. Pure-color histories reproduce the source scores exactly; mixed
// histories have no n-grams of their own and back off.
inline NGramModel merge_colored(std::span<const ColoredModelRef> models) {
  NGramModel merged;
  std::unordered_map<std::string, std::size_t> origin;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const NGramModel& src = *models[m].model;
    for (const auto& e : src.entries(1)) {
      auto tok = colored_token(models[m].color, src.word(e.words[0]));
      if (auto [it, fresh] = origin.emplace(tok, m); !fresh) {
        throw DuplicateColoredToken("token '" + tok + "' supplied by models " +
                                    std::to_string(it->second) + " and " +
                                    std::to_string(m));
      }
    }
  }
  int max_order = 0;
  for (const auto& ref : models) max_order = std::max(max_order, ref.model->max_order());
  for (int n = 1; n <= max_order; ++n) {
    for (const auto& ref : models) {
      if (n > ref.model->max_order()) continue;
      for (const auto& e : ref.model->entries(n)) {
        std::vector<std::string> tokens;
        tokens.reserve(e.words.size());
        for (WordId w : e.words) {
          tokens.push_back(colored_token(ref.color, ref.model->word(w)));
        }
        merged.add_ngram(tokens, e.log10_prob, e.backoff_log10);
      }
    }
  }
  return merged;
}

}  // namespace colordec

#endif  // COLORDEC_NGRAM_LM_HPP_
