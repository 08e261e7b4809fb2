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

// CTC prefix beam search over colored characters.
//
// Each hypothesis is a colored prefix (y, c) with the log10 probability of
// its alignments ending in blank (P-) and in a non-blank (P+). Per frame:
//
//   P-(y, t)      = Ptot(y, t-1) * S[blank, t]
//   P+(y, t)     += P+(y, t-1) * S[last(y), t]
//   P+(y.l, t)   += (l == last(y) ? P-(y, t-1) : Ptot(y, t-1)) * S[l, t]
//
// where the extensions l come from get_next_chars(), so a word's color is
// fixed by its first letter. Hypotheses are ranked by Ptot * Ptext, where
// Ptext accumulates the scorer's word deltas and off-lexicon penalties.

#ifndef COLORDEC_CTC_DECODER_HPP_
#define COLORDEC_CTC_DECODER_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colordec/colored_lexicon.hpp"
#include "colordec/common.hpp"

namespace colordec {

// Per-frame acoustic log posteriors (natural log, as produced by a CTC
// acoustic model). Column i is base character i; the last column is blank.
class LogitsMatrix {
 public:
  LogitsMatrix() = default;
  LogitsMatrix(std::size_t frames, std::size_t columns, std::vector<double> ln_values)
      : frames_(frames), columns_(columns), values_(std::move(ln_values)) {
    if (values_.size() != frames_ * columns_) {
      throw ShapeMismatch("logits data has " + std::to_string(values_.size()) +
                          " values, expected " + std::to_string(frames_ * columns_));
    }
  }

  // Builds from linear-domain rows.
  static LogitsMatrix from_probabilities(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> v;
    v.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols) throw ShapeMismatch("ragged probability rows");
      for (double p : r) v.push_back(p > 0.0 ? std::log(p) : kLogZero);
    }
    return LogitsMatrix(rows.size(), cols, std::move(v));
  }

  std::size_t frames() const { return frames_; }
  std::size_t columns() const { return columns_; }
  double ln(std::size_t t, std::size_t col) const { return values_[t * columns_ + col]; }
  double log10(std::size_t t, std::size_t col) const { return ln_to_log10(ln(t, col)); }
  std::span<const double> row(std::size_t t) const {
    return {values_.data() + t * columns_, columns_};
  }
  std::span<const double> values() const { return values_; }

  bool operator==(const LogitsMatrix&) const = default;

 private:
  std::size_t frames_ = 0;
  std::size_t columns_ = 0;
  std::vector<double> values_;
};

struct ColoredWord {
  std::string word;
  ColorId color;
  bool operator==(const ColoredWord&) const = default;
};

struct ColoredTranscript {
  std::vector<ColoredWord> words;
  // log10 (Ptot * Ptext) of the winning hypothesis.
  double score = kLogZero;
  // Winning colored character sequence, separators included.
  std::vector<ColoredChar> labeling;
};

// Splits a colored labeling into words. Trailing partial words are kept only
// when `keep_partial` is set.
inline std::vector<ColoredWord> labeling_to_words(std::span<const ColoredChar> labeling,
                                                  const ColoredAlphabet& alphabet,
                                                  bool keep_partial = true) {
  std::vector<ColoredWord> words;
  ColoredWord cur;
  bool open = false;
  for (const auto& ch : labeling) {
    if (ch.index == alphabet.separator()) {
      if (open) words.push_back(std::move(cur));
      cur = {};
      open = false;
      continue;
    }
    if (!open) cur.color = ch.color;
    cur.word += alphabet.base_char(ch.index);
    open = true;
  }
  if (open && keep_partial) words.push_back(std::move(cur));
  return words;
}

struct DecoderConfig {
  std::size_t beam_width = 64;
  // Drop hypotheses more than this many log10 units below the frame best.
  std::optional<double> prune_threshold;
};

// Expansion counters, filled when requested.
struct DecodeStats {
  // Successors generated per frame (stay + extensions, summed over beams).
  std::vector<std::size_t> expansions;
  // Largest successor count of a single beam in each frame.
  std::vector<std::size_t> max_successors;
  // Beams kept after selection in each frame.
  std::vector<std::size_t> beams_kept;
};

// A standalone hypothesis record, used by the list-level operations below.
template <class State>
struct Beam {
  std::vector<ColoredChar> chars;
  double log_blank = kLogZero;
  double log_nonblank = kLogZero;
  double text = 0.0;
  State scorer_state{};
  WordCursor cursor;

  double log_total() const { return log10_add(log_blank, log_nonblank); }
  double score() const { return log_total() + text; }
};

// Ranking shared by every stage of the search: higher score first, then the
// shorter sequence, then lexicographic colored-character order.
template <class SeqA, class SeqB>
bool ranks_before(double score_a, const SeqA& a, double score_b, const SeqB& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

template <class State>
std::vector<Beam<State>> get_best_beams(std::vector<Beam<State>> beams, std::size_t m) {
  std::stable_sort(beams.begin(), beams.end(), [](const auto& x, const auto& y) {
    return ranks_before(x.score(), x.chars, y.score(), y.chars);
  });
  if (beams.size() > m) beams.resize(m);
  return beams;
}

// Sums P- and P+ of beams sharing a colored prefix; text and scorer state are
// functions of the prefix and are taken from the first occurrence.
template <class State>
std::vector<Beam<State>> merge_duplicate_prefixes(std::vector<Beam<State>> beams) {
  std::vector<Beam<State>> out;
  std::map<std::vector<ColoredChar>, std::size_t> seen;
  for (auto& b : beams) {
    auto [it, fresh] = seen.emplace(b.chars, out.size());
    if (fresh) {
      out.push_back(std::move(b));
      continue;
    }
    auto& dst = out[it->second];
    dst.log_blank = log10_add(dst.log_blank, b.log_blank);
    dst.log_nonblank = log10_add(dst.log_nonblank, b.log_nonblank);
  }
  return out;
}

// Scorer requirements: initial_state(), score_word(state, word, color,
// in_lexicon, &next) returning a log10 delta, and subword_penalty().
template <class Scorer>
class CtcColoredDecoder {
 public:
  using State = decltype(std::declval<const Scorer&>().initial_state());

  CtcColoredDecoder(const ColoredAlphabet& alphabet, std::span<const LexiconTrie> tries,
                    const Scorer& scorer, DecoderConfig config = {})
      : alphabet_(alphabet), tries_(tries), scorer_(scorer), config_(config) {
    if (config_.beam_width < 1) throw InvalidConfig("beam width must be >= 1");
    if (tries_.size() != alphabet_.num_colors()) {
      throw InvalidConfig("expected one lexicon per color");
    }
    for (std::size_t c = 0; c < tries_.size(); ++c) {
      if (tries_[c].color().value != c) {
        throw InvalidConfig("lexicon " + std::to_string(c) + " carries the wrong color");
      }
    }
  }

  ColoredTranscript decode(const LogitsMatrix& logits, DecodeStats* stats = nullptr) const {
    const std::size_t k = alphabet_.size();
    if (logits.columns() != k + 1) {
      throw ShapeMismatch("logits have " + std::to_string(logits.columns()) +
                          " columns, alphabet needs " + std::to_string(k + 1));
    }
    const std::uint32_t blank = alphabet_.blank_index();
    const auto subword = scorer_.subword_penalty();
    const bool off_lexicon = subword.has_value();

    Search search;
    search.arena.push_back(Node{});
    std::vector<Hyp> beams;
    beams.push_back(Hyp{0, 0.0, kLogZero, 0.0, scorer_.initial_state(), WordCursor{}});

    std::vector<double> frame(k + 1);
    std::vector<ColoredChar> next_chars;
    std::vector<Hyp> next;
    for (std::size_t t = 0; t < logits.frames(); ++t) {
      for (std::size_t c = 0; c <= k; ++c) frame[c] = logits.log10(t, c);
      next.clear();
      const auto stamp = static_cast<std::uint32_t>(t + 1);
      std::size_t expansions = 0, max_succ = 0;

      for (const Hyp& h : beams) {
        const double total = log10_add(h.log_blank, h.log_nonblank);
        // Copied: the arena grows while this hypothesis is extended.
        const std::uint32_t depth = search.arena[h.node].depth;
        const std::uint32_t last_char = search.arena[h.node].ch.index;
        std::size_t succ = 1;
        {
          Hyp& stay = slot(search, next, stamp, h.node, [&] { return fresh(h, h.node); });
          if (depth > 0) {
            stay.log_nonblank =
                log10_add(stay.log_nonblank, h.log_nonblank + frame[last_char]);
          }
          stay.log_blank = log10_add(stay.log_blank, total + frame[blank]);
        }
        get_next_chars(alphabet_, tries_, h.cursor, off_lexicon, next_chars);
        for (const ColoredChar ch : next_chars) {
          const std::uint32_t child = child_of(search, h.node, ch);
          const bool repeat = depth > 0 && last_char == ch.index;
          const double p = (repeat ? h.log_blank : total) + frame[ch.index];
          Hyp& ext = slot(search, next, stamp, child, [&] { return extend(h, child, ch); });
          ext.log_nonblank = log10_add(ext.log_nonblank, p);
          ++succ;
        }
        expansions += succ;
        max_succ = std::max(max_succ, succ);
      }

      std::erase_if(next, [](const Hyp& h) {
        return log10_add(h.log_blank, h.log_nonblank) == kLogZero || h.text == kLogZero;
      });
      if (stats != nullptr) {
        stats->expansions.push_back(expansions);
        stats->max_successors.push_back(max_succ);
      }
      if (next.empty()) return ColoredTranscript{};

      const bool last = t + 1 == logits.frames();
      if (!last) {
        select(search, next, config_.beam_width);
        if (stats != nullptr) stats->beams_kept.push_back(next.size());
      }
      beams.swap(next);
    }
    return finish(search, beams);
  }

 private:
  struct Node {
    std::uint32_t parent = 0;
    ColoredChar ch{};
    std::uint32_t depth = 0;
    std::vector<std::pair<ColoredChar, std::uint32_t>> children;
    // Slot of this prefix in the hypothesis list of frame `stamp`.
    std::uint32_t stamp = 0;
    std::uint32_t slot = 0;
  };

  struct Hyp {
    std::uint32_t node = 0;
    double log_blank = kLogZero;
    double log_nonblank = kLogZero;
    double text = 0.0;
    State state{};
    WordCursor cursor;
  };

  struct Search {
    std::vector<Node> arena;
  };

  static std::uint32_t child_of(Search& s, std::uint32_t parent, ColoredChar ch) {
    for (const auto& [c, id] : s.arena[parent].children) {
      if (c == ch) return id;
    }
    const auto id = static_cast<std::uint32_t>(s.arena.size());
    Node n;
    n.parent = parent;
    n.ch = ch;
    n.depth = s.arena[parent].depth + 1;
    s.arena.push_back(std::move(n));
    s.arena[parent].children.emplace_back(ch, id);
    return id;
  }

  template <class Make>
  static Hyp& slot(Search& s, std::vector<Hyp>& next, std::uint32_t stamp,
                   std::uint32_t node, Make make) {
    Node& n = s.arena[node];
    if (n.stamp != stamp) {
      n.stamp = stamp;
      n.slot = static_cast<std::uint32_t>(next.size());
      next.push_back(make());
    }
    return next[s.arena[node].slot];
  }

  Hyp fresh(const Hyp& h, std::uint32_t node) const {
    return Hyp{node, kLogZero, kLogZero, h.text, h.state, h.cursor};
  }

  // Hypothesis for h extended by ch: text score and cursor follow the prefix.
  Hyp extend(const Hyp& h, std::uint32_t node, ColoredChar ch) const {
    Hyp out{node, kLogZero, kLogZero, h.text, h.state, h.cursor};
    const std::uint32_t sep = alphabet_.separator();
    if (ch.index == sep) {
      if (!h.cursor.at_boundary()) out.text += complete_word(h, &out.state);
    } else if (!h.cursor.at_boundary()) {
      const bool on_trie =
          h.cursor.node && tries_[h.cursor.color.value].child(*h.cursor.node, ch.index);
      if (!on_trie) out.text += *scorer_.subword_penalty();
    }
    out.cursor = advance(tries_, sep, h.cursor, ch);
    return out;
  }

  // Scores the partial word of h as a completed word.
  double complete_word(const Hyp& h, State* next) const {
    const auto& trie = tries_[h.cursor.color.value];
    if (h.cursor.node && trie.node(*h.cursor.node).word_final) {
      return scorer_.score_word(h.state, trie.node(*h.cursor.node).word, h.cursor.color,
                                true, next);
    }
    return scorer_.score_word(h.state, std::string_view{}, h.cursor.color, false, next);
  }

  std::vector<ColoredChar> labeling(const Search& s, std::uint32_t node) const {
    std::vector<ColoredChar> out(s.arena[node].depth);
    for (std::uint32_t n = node; n != 0; n = s.arena[n].parent) {
      out[s.arena[n].depth - 1] = s.arena[n].ch;
    }
    return out;
  }

  bool before(const Search& s, double sa, std::uint32_t a, double sb, std::uint32_t b) const {
    if (sa != sb) return sa > sb;
    const auto da = s.arena[a].depth, db = s.arena[b].depth;
    if (da != db) return da < db;
    return ranks_before(sa, labeling(s, a), sb, labeling(s, b));
  }

  void select(const Search& s, std::vector<Hyp>& hyps, std::size_t width) const {
    std::vector<double> score(hyps.size());
    std::vector<std::uint32_t> order(hyps.size());
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      score[i] = log10_add(hyps[i].log_blank, hyps[i].log_nonblank) + hyps[i].text;
      order[i] = static_cast<std::uint32_t>(i);
    }
    auto cmp = [&](std::uint32_t x, std::uint32_t y) {
      return before(s, score[x], hyps[x].node, score[y], hyps[y].node);
    };
    if (order.size() > width) {
      std::nth_element(order.begin(), order.begin() + width, order.end(), cmp);
      order.resize(width);
    }
    std::sort(order.begin(), order.end(), cmp);
    if (config_.prune_threshold) {
      const double floor = score[order.front()] - *config_.prune_threshold;
      std::erase_if(order, [&](std::uint32_t i) { return score[i] < floor; });
    }
    std::vector<Hyp> kept;
    kept.reserve(order.size());
    for (auto i : order) kept.push_back(std::move(hyps[i]));
    hyps.swap(kept);
  }

  ColoredTranscript finish(const Search& s, const std::vector<Hyp>& hyps) const {
    std::optional<std::size_t> best;
    double best_score = kLogZero;
    bool best_keeps_partial = true;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      const Hyp& h = hyps[i];
      double sc = log10_add(h.log_blank, h.log_nonblank) + h.text;
      bool keep_partial = true;
      if (!h.cursor.at_boundary()) {
        const auto& trie = tries_[h.cursor.color.value];
        const bool word_final = h.cursor.node && trie.node(*h.cursor.node).word_final;
        if (word_final || scorer_.subword_penalty()) {
          State unused;
          sc += complete_word(h, &unused);
        } else {
          keep_partial = false;
        }
      }
      if (!best || before(s, sc, h.node, best_score, hyps[*best].node)) {
        best = i;
        best_score = sc;
        best_keeps_partial = keep_partial;
      }
    }
    ColoredTranscript out;
    if (!best || best_score == kLogZero) return out;
    out.score = best_score;
    out.labeling = labeling(s, hyps[*best].node);
    out.words = labeling_to_words(out.labeling, alphabet_, best_keeps_partial);
    return out;
  }

  const ColoredAlphabet& alphabet_;
  std::span<const LexiconTrie> tries_;
  const Scorer& scorer_;
  DecoderConfig config_;
};

template <class Scorer>
ColoredTranscript decode(const LogitsMatrix& logits, const ColoredAlphabet& alphabet,
                         std::span<const LexiconTrie> tries, const Scorer& scorer,
                         DecoderConfig config = {}, DecodeStats* stats = nullptr) {
  return CtcColoredDecoder<Scorer>(alphabet, tries, scorer, config).decode(logits, stats);
}

}  // namespace colordec

#endif  // COLORDEC_CTC_DECODER_HPP_
