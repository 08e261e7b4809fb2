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

// Synthetic mixed-speech corpora: sentences from a general source with
// jargon words substituted in, rendered to block-model CTC posteriors.

#ifndef COLORDEC_SYNTH_HPP_
#define COLORDEC_SYNTH_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "colordec/colored_lexicon.hpp"
#include "colordec/corpus_io.hpp"
#include "colordec/ctc_decoder.hpp"
#include "colordec/metrics.hpp"
#include "colordec/ngram_lm.hpp"

namespace colordec {

// mt19937_64 with distribution code of our own, so corpora are identical
// across standard library implementations.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

 private:
  std::mt19937_64 engine_;
};

struct SynthesisSpec {
  std::vector<WordSeq> general_sentences;
  double jargon_insertion_rate = 0.3;
  double noise_level = 0.25;
  int frames_per_char = 1;
  std::uint64_t rng_seed = 7;
  std::size_t num_utterances = 200;
  std::string id_prefix = "utt";

  void validate() const {
    if (!(jargon_insertion_rate >= 0.0 && jargon_insertion_rate <= 1.0)) {
      throw InvalidConfig("jargon insertion rate must lie in [0, 1]");
    }
    if (!(noise_level >= 0.0 && noise_level < 1.0)) {
      throw InvalidConfig("noise level must lie in [0, 1)");
    }
    if (frames_per_char < 1) throw InvalidConfig("frames per char must be >= 1");
  }
};

struct SynthUtterance {
  std::string id;
  WordSeq words;
  std::vector<bool> jargon_mask;
  LogitsMatrix logits;
};

// Each character holds `frames_per_char` frames with 1 - noise on its column
// and the noise spread evenly over the other K columns. A blank frame
// separates repeated characters.
inline LogitsMatrix render_logits(const WordSeq& words, const ColoredAlphabet& alphabet,
                                  double noise_level, int frames_per_char) {
  const std::size_t cols = alphabet.size() + 1;
  const std::uint32_t blank = alphabet.blank_index();
  const auto chars = alphabet.encode(join_words(words));
  const double on = 1.0 - noise_level;
  const double off = noise_level / static_cast<double>(cols - 1);
  const double ln_on = std::log(on);
  const double ln_off = off > 0.0 ? std::log(off) : kLogZero;
  std::vector<double> values;
  std::size_t frames = 0;
  auto emit = [&](std::uint32_t col) {
    for (std::size_t c = 0; c < cols; ++c) values.push_back(c == col ? ln_on : ln_off);
    ++frames;
  };
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (i > 0 && chars[i] == chars[i - 1]) emit(blank);
    for (int f = 0; f < frames_per_char; ++f) emit(chars[i]);
  }
  return LogitsMatrix(frames, cols, std::move(values));
}

// Samples general sentences and replaces each word by a jargon word with
// probability `jargon_insertion_rate`.
inline std::vector<std::pair<WordSeq, std::vector<bool>>> sample_mixed_sentences(
    const SynthesisSpec& spec, const std::vector<std::string>& jargon_words, SynthRng& rng) {
  std::vector<std::pair<WordSeq, std::vector<bool>>> out;
  out.reserve(spec.num_utterances);
  for (std::size_t n = 0; n < spec.num_utterances; ++n) {
    WordSeq words = rng.pick(spec.general_sentences);
    std::vector<bool> mask(words.size(), false);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (rng.uniform() < spec.jargon_insertion_rate) {
        words[i] = rng.pick(jargon_words);
        mask[i] = true;
      }
    }
    out.emplace_back(std::move(words), std::move(mask));
  }
  return out;
}

// lexicons[0] is the general lexicon; every later lexicon supplies jargon.
inline std::vector<SynthUtterance> synthesize_corpus(
    const SynthesisSpec& spec, const std::vector<std::vector<std::string>>& lexicons,
    const ColoredAlphabet& alphabet) {
  spec.validate();
  if (spec.general_sentences.empty()) throw EmptyLexicon("no general sentences to sample");
  if (lexicons.empty() || lexicons[0].empty()) throw EmptyLexicon("general lexicon is empty");
  std::vector<std::string> jargon;
  for (std::size_t c = 1; c < lexicons.size(); ++c) {
    jargon.insert(jargon.end(), lexicons[c].begin(), lexicons[c].end());
  }
  if (jargon.empty() && spec.jargon_insertion_rate > 0.0) {
    throw EmptyLexicon("jargon lexicon is empty");
  }
  SynthRng rng(spec.rng_seed);
  auto sentences = sample_mixed_sentences(spec, jargon, rng);
  std::vector<SynthUtterance> out;
  const int width = static_cast<int>(std::to_string(std::max<std::size_t>(spec.num_utterances, 1) - 1).size());
  for (std::size_t n = 0; n < sentences.size(); ++n) {
    std::string num = std::to_string(n);
    num.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0');
    auto& [words, mask] = sentences[n];
    SynthUtterance u{spec.id_prefix + "-" + num, words, mask,
                     render_logits(words, alphabet, spec.noise_level, spec.frames_per_char)};
    out.push_back(std::move(u));
  }
  return out;
}

// Writes <dir>/logits/<id>.ctcl and <dir>/<manifest_name>.
inline std::vector<Utterance> write_synth_corpus(const std::filesystem::path& dir,
                                                 const std::vector<SynthUtterance>& utts,
                                                 const std::string& manifest_name = "manifest.jsonl") {
  std::filesystem::create_directories(dir / "logits");
  std::vector<Utterance> manifest;
  for (const auto& u : utts) {
    Utterance m;
    m.id = u.id;
    m.logits = "logits/" + u.id + ".ctcl";
    m.logits_path = dir / m.logits;
    m.reference = u.words;
    m.jargon_mask = u.jargon_mask;
    write_logits_file(m.logits_path, u.logits);
    manifest.push_back(std::move(m));
  }
  write_manifest(dir / manifest_name, manifest);
  return manifest;
}

// Absolute-discount bigram model backing off to maximum-likelihood unigrams.
// Only meant for building fixture models from synthetic text.
inline NGramModel estimate_bigram_lm(const std::vector<WordSeq>& sentences,
                                     double discount = 0.5) {
  std::map<std::string, double> uni;
  std::map<std::string, std::map<std::string, double>> bi;
  double total = 0.0;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      uni[s[i]] += 1.0;
      total += 1.0;
      if (i + 1 < s.size()) bi[s[i]][s[i + 1]] += 1.0;
    }
  }
  NGramModel lm;
  if (total == 0.0) return lm;
  std::map<std::string, double> backoff;
  for (const auto& [h, nexts] : bi) {
    double hist = 0.0, seen_mass = 0.0;
    for (const auto& [w, c] : nexts) {
      hist += c;
      seen_mass += uni[w] / total;
    }
    const double freed = discount * static_cast<double>(nexts.size()) / hist;
    if (seen_mass < 1.0) backoff[h] = std::log10(freed / (1.0 - seen_mass));
  }
  for (const auto& [w, c] : uni) {
    std::optional<double> bo;
    if (auto it = backoff.find(w); it != backoff.end()) bo = it->second;
    lm.add_ngram(std::vector<std::string>{w}, std::log10(c / total), bo);
  }
  for (const auto& [h, nexts] : bi) {
    double hist = 0.0;
    for (const auto& [w, c] : nexts) hist += c;
    for (const auto& [w, c] : nexts) {
      lm.add_ngram(std::vector<std::string>{h, w}, std::log10((c - discount) / hist),
                   std::nullopt);
    }
  }
  lm.validate();
  return lm;
}

// A small self-contained mixed-speech world: a template grammar for general
// sentences and jargon terms that sit one or two edits away from general
// words, so that the language model has to resolve acoustically close pairs.
struct DemoWorld {
  std::vector<WordSeq> general_text;  // general LM training text
  std::vector<WordSeq> domain_text;   // jargon LM training text (mixed)
  std::vector<WordSeq> test_sentences;  // general sentences to render
  std::vector<std::string> general_lexicon;
  std::vector<std::string> jargon_terms;
  std::vector<std::string> jargon_lexicon;  // jargon LM vocabulary
};

inline std::string mutate_word(const std::string& w, SynthRng& rng) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  std::string out = w;
  const std::size_t edits = 1 + rng.below(2);
  for (std::size_t e = 0; e < edits; ++e) {
    const std::size_t pos = rng.below(out.size());
    if (rng.uniform() < 0.7) {
      out[pos] = letters[rng.below(letters.size())];
    } else {
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), letters[rng.below(letters.size())]);
    }
  }
  return out;
}

inline DemoWorld make_demo_world(std::uint64_t seed, std::size_t text_sentences = 3000,
                                 std::size_t num_jargon = 40) {
  const std::vector<std::string> dets = {"the", "a", "this", "that", "his", "her", "our"};
  const std::vector<std::string> adjs = {"old",   "new",   "small", "large", "loud",
                                         "quiet", "broken", "clean", "heavy", "warm",
                                         "cold",  "strong"};
  const std::vector<std::string> nouns = {
      "pump",   "valve",  "motor",  "engine", "patient", "doctor",  "nurse",  "worker",
      "pipe",   "belt",   "door",   "window", "table",   "chair",   "room",   "floor",
      "water",  "pressure", "sound", "noise", "report",  "problem", "morning", "evening",
      "hand",   "head",   "chest",  "back",   "fever",   "pain",    "machine", "light"};
  const std::vector<std::string> pronouns = {"he", "she", "they", "we", "i", "you"};
  const std::vector<std::string> verbs = {"checked", "found", "said",    "heard", "saw",
                                          "fixed",   "moved", "cleaned", "felt",  "took",
                                          "needs",   "has",   "had",     "keeps", "wants"};
  const std::vector<std::string> preps = {"near", "under", "behind", "in", "on", "after", "before"};

  SynthRng rng(seed);
  auto noun_phrase = [&](WordSeq& s) {
    s.push_back(rng.pick(dets));
    if (rng.uniform() < 0.4) s.push_back(rng.pick(adjs));
    s.push_back(rng.pick(nouns));
  };
  auto sentence = [&] {
    WordSeq s;
    if (rng.uniform() < 0.5) s.push_back(rng.pick(pronouns));
    else noun_phrase(s);
    s.push_back(rng.pick(verbs));
    noun_phrase(s);
    if (rng.uniform() < 0.5) {
      s.push_back(rng.pick(preps));
      noun_phrase(s);
    }
    return s;
  };

  DemoWorld w;
  for (std::size_t i = 0; i < text_sentences; ++i) w.general_text.push_back(sentence());
  for (std::size_t i = 0; i < 200; ++i) w.test_sentences.push_back(sentence());

  std::set<std::string> general;
  for (const auto& s : w.general_text) general.insert(s.begin(), s.end());
  for (const auto& s : w.test_sentences) general.insert(s.begin(), s.end());
  w.general_lexicon.assign(general.begin(), general.end());

  std::vector<std::string> bases;
  for (const auto& v : {nouns, adjs, verbs}) {
    for (const auto& x : v) {
      if (x.size() >= 4) bases.push_back(x);
    }
  }
  std::set<std::string> jargon;
  while (jargon.size() < num_jargon) {
    auto j = mutate_word(rng.pick(bases), rng);
    if (!general.count(j)) jargon.insert(j);
  }
  w.jargon_terms.assign(jargon.begin(), jargon.end());

  // Domain text mixes jargon into general sentences, like the speech itself.
  SynthesisSpec domain;
  domain.general_sentences = w.general_text;
  domain.num_utterances = text_sentences;
  SynthRng drng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& [words, mask] : sample_mixed_sentences(domain, w.jargon_terms, drng)) {
    w.domain_text.push_back(std::move(words));
  }
  std::set<std::string> jvocab;
  for (const auto& s : w.domain_text) jvocab.insert(s.begin(), s.end());
  w.jargon_lexicon.assign(jvocab.begin(), jvocab.end());
  return w;
}

}  // namespace colordec

#endif  // COLORDEC_SYNTH_HPP_
