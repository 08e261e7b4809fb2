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

// Exhaustive reference implementations used to check the beam search on
// small instances. Deliberately simple: the CTC labeling probability comes
// from the textbook forward recursion, and the decoder's constraints are
// re-derived from plain word sets rather than from the tries' cursors.

#ifndef COLORDEC_ORACLE_HPP_
#define COLORDEC_ORACLE_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colordec/colored_lexicon.hpp"
#include "colordec/common.hpp"
#include "colordec/ctc_decoder.hpp"
#include "colordec/fusion_scorers.hpp"
#include "colordec/ngram_lm.hpp"
#include "colordec/synth.hpp"

namespace colordec::oracle {

inline constexpr std::size_t kMaxCandidates = 1'000'000;

struct PathSplit {
  double ending_blank = kLogZero;
  double ending_nonblank = kLogZero;
  double total() const { return log10_add(ending_blank, ending_nonblank); }
};

// log10 probability mass of all alignments collapsing to `labeling`, split by
// whether the final frame is blank.
inline PathSplit ctc_path_split(const LogitsMatrix& logits,
                                std::span<const std::uint32_t> labeling) {
  const std::size_t frames = logits.frames();
  if (labeling.size() > frames) {
    throw LabelTooLong("labeling of length " + std::to_string(labeling.size()) +
                       " exceeds " + std::to_string(frames) + " frames");
  }
  const auto blank = static_cast<std::uint32_t>(logits.columns() - 1);
  if (frames == 0) return {0.0, kLogZero};

  std::vector<std::uint32_t> ext;
  ext.push_back(blank);
  for (auto l : labeling) {
    ext.push_back(l);
    ext.push_back(blank);
  }
  const std::size_t n = ext.size();
  std::vector<double> alpha(n, kLogZero), next(n);
  alpha[0] = logits.log10(0, blank);
  if (n > 1) alpha[1] = logits.log10(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < n; ++s) {
      double a = alpha[s];
      if (s >= 1) a = log10_add(a, alpha[s - 1]);
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) {
        a = log10_add(a, alpha[s - 2]);
      }
      next[s] = a == kLogZero ? kLogZero : a + logits.log10(t, ext[s]);
    }
    alpha.swap(next);
  }
  PathSplit out;
  out.ending_blank = alpha[n - 1];
  if (n >= 2) out.ending_nonblank = alpha[n - 2];
  return out;
}

inline double ctc_path_sum(const LogitsMatrix& logits,
                           std::span<const std::uint32_t> labeling) {
  return ctc_path_split(logits, labeling).total();
}

// Linear-domain sum of ctc_path_sum over every labeling of length <= frames
// over `num_chars` base characters.
inline double total_labeling_mass(const LogitsMatrix& logits, std::size_t num_chars) {
  double total = 0.0;
  std::vector<std::uint32_t> cur;
  std::size_t visited = 0;
  std::function<void()> rec = [&] {
    if (++visited > kMaxCandidates) throw InstanceTooLarge("too many labelings");
    total += std::pow(10.0, ctc_path_sum(logits, cur));
    if (cur.size() == logits.frames()) return;
    for (std::uint32_t c = 0; c < num_chars; ++c) {
      cur.push_back(c);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return total;
}

struct OracleResult {
  ColoredTranscript best;
  std::map<std::vector<ColoredChar>, double> all_scores;
};

namespace detail {

inline void collect_words(const LexiconTrie& trie, std::uint32_t node,
                          std::set<std::string>& out) {
  const auto& n = trie.node(node);
  if (n.word_final) out.insert(n.word);
  for (const auto& [ch, kid] : n.children) collect_words(trie, kid, out);
}

struct Lexicon {
  std::set<std::string> words;
  std::set<std::string> prefixes;  // nonempty prefixes of words
};

}  // namespace detail

// Scores every colored labeling of length <= max_label_len that the decoder
// could produce and returns the best under the decoder's tie-break rule.
template <class Scorer>
OracleResult exhaustive_decode(const LogitsMatrix& logits, const ColoredAlphabet& alphabet,
                               std::span<const LexiconTrie> tries, const Scorer& scorer,
                               std::size_t max_label_len) {
  if (logits.columns() != alphabet.size() + 1) {
    throw ShapeMismatch("logits do not match the alphabet");
  }
  max_label_len = std::min(max_label_len, logits.frames());
  const std::uint32_t sep = alphabet.separator();
  const auto num_colors = static_cast<std::uint32_t>(tries.size());
  const bool off_lexicon = scorer.subword_penalty().has_value();

  std::vector<detail::Lexicon> lex(num_colors);
  for (std::uint32_t c = 0; c < num_colors; ++c) {
    detail::collect_words(tries[c], LexiconTrie::kRoot, lex[c].words);
    for (const auto& w : lex[c].words) {
      const auto chars = utf8_chars(w);
      std::string p;
      for (const auto& ch : chars) {
        p += ch;
        lex[c].prefixes.insert(p);
      }
    }
  }
  auto is_prefix = [&](std::uint32_t c, const std::string& s) {
    return lex[c].prefixes.count(s) > 0;
  };

  // Whether `seq` (whose every proper prefix is valid) may end with its last
  // character.
  auto valid_last = [&](const std::vector<ColoredChar>& seq) {
    const ColoredChar last = seq.back();
    // Current word: letters after the last separator before `last`.
    std::size_t start = seq.size() - 1;
    while (start > 0 && seq[start - 1].index != sep) --start;
    ColorId prev_color{0};
    for (std::size_t i = seq.size() - 1; i-- > 0;) {
      if (seq[i].index != sep) {
        prev_color = seq[i].color;
        break;
      }
    }
    if (last.index == sep) {
      if (last.color != prev_color) return false;
      if (start == seq.size() - 1) return true;  // no open word
      std::string word;
      for (std::size_t i = start; i + 1 < seq.size(); ++i) word += alphabet.base_char(seq[i].index);
      return off_lexicon || lex[seq[start].color.value].words.count(word) > 0;
    }
    if (start == seq.size() - 1) {
      return is_prefix(last.color.value, alphabet.base_char(last.index));
    }
    if (last.color != seq[start].color) return false;
    if (off_lexicon) return true;
    std::string prefix;
    for (std::size_t i = start; i < seq.size(); ++i) prefix += alphabet.base_char(seq[i].index);
    return is_prefix(last.color.value, prefix);
  };

  using State = decltype(scorer.initial_state());
  // Text score of a labeling, including end-of-utterance handling of an open
  // word. Returns (score, keep trailing partial word).
  auto text_score = [&](const std::vector<ColoredChar>& seq) {
    State state = scorer.initial_state();
    double text = 0.0;
    std::string word;
    ColorId color{0};
    auto complete = [&] {
      State next{};
      const bool known = lex[color.value].words.count(word) > 0;
      text += scorer.score_word(state, known ? std::string_view(word) : std::string_view{},
                                color, known, &next);
      state = next;
    };
    for (const auto& ch : seq) {
      if (ch.index == sep) {
        if (!word.empty()) complete();
        word.clear();
        continue;
      }
      if (word.empty()) color = ch.color;
      word += alphabet.base_char(ch.index);
      if (word.size() > alphabet.base_char(ch.index).size() && !is_prefix(color.value, word)) {
        text += *scorer.subword_penalty();
      }
    }
    bool keep = true;
    if (!word.empty()) {
      if (lex[color.value].words.count(word) > 0 || off_lexicon) {
        complete();
      } else {
        keep = false;
      }
    }
    return std::pair<double, bool>{text, keep};
  };

  OracleResult result;
  std::vector<ColoredChar> best_seq;
  double best_score = kLogZero;
  bool best_keep = true;
  bool have_best = false;
  std::vector<ColoredChar> seq;
  std::size_t visited = 0;

  auto consider = [&] {
    if (++visited > kMaxCandidates) {
      throw InstanceTooLarge("more than " + std::to_string(kMaxCandidates) + " labelings");
    }
    std::vector<std::uint32_t> base;
    for (const auto& ch : seq) base.push_back(ch.index);
    const double acoustic = ctc_path_sum(logits, base);
    const auto [text, keep] = text_score(seq);
    const double score = acoustic == kLogZero ? kLogZero : acoustic + text;
    result.all_scores.emplace(seq, score);
    if (score == kLogZero) return;
    if (!have_best || ranks_before(score, seq, best_score, best_seq)) {
      have_best = true;
      best_seq = seq;
      best_score = score;
      best_keep = keep;
    }
  };

  std::function<void()> rec = [&] {
    consider();
    if (seq.size() == max_label_len) return;
    for (std::uint32_t c = 0; c < num_colors; ++c) {
      for (std::uint32_t ch = 0; ch < alphabet.size(); ++ch) {
        seq.push_back({ch, ColorId(c)});
        if (valid_last(seq)) rec();
        seq.pop_back();
      }
    }
  };
  rec();

  if (have_best) {
    result.best.score = best_score;
    result.best.labeling = best_seq;
    result.best.words = labeling_to_words(best_seq, alphabet, best_keep);
  }
  return result;
}

// A small random decoding problem: alphabet of `num_chars` characters (the
// separator plus letters), one lexicon and bigram LM per color, and random
// posteriors over at most `max_frames` frames.
struct RandomInstance {
  ColoredAlphabet alphabet;
  std::vector<std::vector<std::string>> lexicons;
  std::vector<LexiconTrie> tries;
  std::vector<std::shared_ptr<const NGramModel>> lms;
  LogitsMatrix logits;
  std::optional<double> subword_penalty;
};

struct RandomInstanceSpec {
  std::uint32_t num_colors = 2;
  std::size_t max_frames = 4;
  std::size_t max_chars = 3;
  std::size_t max_words = 3;
  std::size_t max_word_len = 2;
  // Probability that off-lexicon extensions are enabled.
  double subword_rate = 0.5;
};

inline NGramModel random_bigram_lm(const std::vector<std::string>& words, SynthRng& rng) {
  NGramModel lm;
  std::vector<double> p;
  double z = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    p.push_back(0.05 + rng.uniform());
    z += p.back();
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    lm.add_ngram(std::vector<std::string>{words[i]}, std::log10(p[i] / z),
                 -rng.uniform());
  }
  for (const auto& a : words) {
    for (const auto& b : words) {
      if (rng.uniform() < 0.3) {
        lm.add_ngram(std::vector<std::string>{a, b}, std::log10(0.05 + 0.95 * rng.uniform()),
                     std::nullopt);
      }
    }
  }
  return lm;
}

inline RandomInstance random_instance(std::uint64_t seed, const RandomInstanceSpec& spec = {}) {
  SynthRng rng(seed);
  static const std::vector<std::string> pool = {" ", "a", "b", "c", "d", "e", "f", "g"};
  const std::size_t k = 2 + rng.below(std::max<std::size_t>(spec.max_chars, 2) - 1);
  std::vector<std::string> chars(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  RandomInstance inst{ColoredAlphabet(chars, spec.num_colors), {}, {}, {}, {}, std::nullopt};
  for (std::uint32_t c = 0; c < spec.num_colors; ++c) {
    std::set<std::string> words;
    const std::size_t n = 1 + rng.below(spec.max_words);
    for (std::size_t i = 0; i < n; ++i) {
      std::string w;
      const std::size_t len = 1 + rng.below(spec.max_word_len);
      for (std::size_t j = 0; j < len; ++j) w += chars[1 + rng.below(k - 1)];
      words.insert(w);
    }
    inst.lexicons.emplace_back(words.begin(), words.end());
    inst.tries.push_back(build_trie(ColorId(c), inst.lexicons.back(), inst.alphabet));
    inst.lms.push_back(std::make_shared<NGramModel>(random_bigram_lm(inst.lexicons.back(), rng)));
  }
  const std::size_t frames = 1 + rng.below(spec.max_frames);
  std::vector<std::vector<double>> rows(frames, std::vector<double>(k + 1));
  for (auto& row : rows) {
    double z = 0.0;
    for (auto& v : row) z += (v = 0.02 + rng.uniform());
    for (auto& v : row) v /= z;
  }
  inst.logits = LogitsMatrix::from_probabilities(rows);
  if (rng.uniform() < spec.subword_rate) inst.subword_penalty = -3.0 * rng.uniform();
  return inst;
}

}  // namespace colordec::oracle

#endif  // COLORDEC_ORACLE_HPP_
