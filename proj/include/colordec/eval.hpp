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

// Corpus evaluation: builds a decoder per fusion method, decodes a manifest
// concurrently, scores CER / WER / jargon WER and searches hyperparameter
// grids. Results are always reduced in manifest order.

#ifndef COLORDEC_EVAL_HPP_
#define COLORDEC_EVAL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "colordec/colored_lexicon.hpp"
#include "colordec/corpus_io.hpp"
#include "colordec/ctc_decoder.hpp"
#include "colordec/fusion_scorers.hpp"
#include "colordec/metrics.hpp"
#include "colordec/ngram_lm.hpp"

namespace colordec {

// Runs f(i) for i in [0, n) on up to `jobs` threads. The exception of the
// lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::optional<std::size_t> failed_at;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failed_at || i < *failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Lexicons and models shared by every method; index i is color i.
struct LanguageResources {
  std::vector<std::string> alphabet_chars = utf8_chars(kDefaultAlphabet);
  std::vector<std::vector<std::string>> lexicons;
  std::vector<std::shared_ptr<const NGramModel>> lms;
};

struct MethodConfig {
  FusionKind kind = FusionKind::kColoring;
  ScorerConfig scorer;
  int num_bins = 53;
  DecoderConfig decoder;
};

// Every lexicon merged into one word list, first occurrence order.
inline std::vector<std::string> union_lexicon(const std::vector<std::vector<std::string>>& lexicons) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& lex : lexicons) {
    for (const auto& w : lex) {
      if (seen.insert(w).second) out.push_back(w);
    }
  }
  return out;
}

// Calibration events for bin estimation. At every reference position the
// reference word is a correct event; every other vocabulary word within two
// character edits of it is an incorrect event. Each LM sees its own history.
inline std::vector<CalibrationPair> calibration_pairs(
    const NGramModel& general, const NGramModel& jargon, std::span<const WordSeq> references,
    const std::vector<std::string>& vocabulary, const ScorerConfig& config,
    std::size_t max_edits = 2) {
  std::vector<std::vector<std::string>> chars;
  for (const auto& w : vocabulary) chars.push_back(utf8_chars(w));
  std::map<std::string, std::vector<std::size_t>> neighbours;
  std::vector<CalibrationPair> out;
  for (const auto& ref : references) {
    LmState sg, sj;
    for (const auto& w : ref) {
      auto [it, fresh] = neighbours.try_emplace(w);
      if (fresh) {
        const auto wc = utf8_chars(w);
        for (std::size_t v = 0; v < vocabulary.size(); ++v) {
          if (vocabulary[v] != w && edit_distance(wc, chars[v]) <= max_edits) it->second.push_back(v);
        }
      }
      auto pair_for = [&](std::string_view word, bool correct) {
        return CalibrationPair{general.score_word(sg, word, nullptr, config.unknown_penalty(0)).log10_prob,
                               jargon.score_word(sj, word, nullptr, config.unknown_penalty(1)).log10_prob,
                               correct};
      };
      out.push_back(pair_for(w, true));
      for (auto v : it->second) out.push_back(pair_for(vocabulary[v], false));
      LmState ng, nj;
      general.score_word(sg, w, &ng, 0.0);
      jargon.score_word(sj, w, &nj, 0.0);
      sg = ng;
      sj = nj;
    }
  }
  return out;
}

// A decoder ready to run: alphabet, tries and scorer for one method. Coloring
// decodes with one trie per color; every other method decodes over the union
// of the lexicons with a single color.
class PreparedMethod {
 public:
  PreparedMethod(const LanguageResources& res, const MethodConfig& method,
                 std::optional<BinTable> bins = std::nullopt)
      : method_(method),
        alphabet_(res.alphabet_chars,
                  uses_colors(method.kind) ? static_cast<std::uint32_t>(res.lexicons.size()) : 1u),
        scorer_(make_scorer(method.kind, FusionModels{res.lms, std::move(bins)}, method.scorer)) {
    if (res.lexicons.empty()) throw EmptyLexicon("no lexicons given");
    if (uses_colors(method.kind)) {
      if (res.lms.size() != res.lexicons.size()) {
        throw MissingModel("coloring needs one language model per lexicon");
      }
      for (std::uint32_t c = 0; c < res.lexicons.size(); ++c) {
        tries_.push_back(build_trie(ColorId(c), res.lexicons[c], alphabet_));
      }
    } else {
      tries_.push_back(build_trie(ColorId(0), union_lexicon(res.lexicons), alphabet_));
    }
  }

  PreparedMethod(const PreparedMethod&) = delete;
  PreparedMethod& operator=(const PreparedMethod&) = delete;

  const MethodConfig& method() const { return method_; }
  const ColoredAlphabet& alphabet() const { return alphabet_; }
  const std::vector<LexiconTrie>& tries() const { return tries_; }
  const FusionScorer& scorer() const { return scorer_; }

  ColoredTranscript decode(const LogitsMatrix& logits, DecodeStats* stats = nullptr) const {
    return colordec::decode(logits, alphabet_, tries_, scorer_, method_.decoder, stats);
  }

 private:
  MethodConfig method_;
  ColoredAlphabet alphabet_;
  std::vector<LexiconTrie> tries_;
  FusionScorer scorer_;
};

// Fits the bin table for a bins method from reference transcripts.
inline BinTable fit_bins_for(const LanguageResources& res, const ScorerConfig& config,
                             std::span<const WordSeq> calibration_refs, int num_bins) {
  if (res.lms.size() < 2) throw MissingModel("bins fusion needs two language models");
  const auto pairs = calibration_pairs(*res.lms[0], *res.lms[1], calibration_refs,
                                       union_lexicon(res.lexicons), config);
  return fit_bin_table(pairs, num_bins);
}

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<LogitsMatrix> logits;

  std::vector<WordSeq> references() const {
    std::vector<WordSeq> out;
    for (const auto& u : utterances) out.push_back(u.reference);
    return out;
  }
};

inline Corpus load_corpus(const fs::path& manifest) {
  Corpus c;
  c.utterances = read_manifest(manifest);
  for (const auto& u : c.utterances) c.logits.push_back(read_logits_file(u.logits_path));
  return c;
}

inline std::vector<ColoredTranscript> decode_corpus(const PreparedMethod& method,
                                                    const std::vector<LogitsMatrix>& logits,
                                                    unsigned jobs) {
  std::vector<ColoredTranscript> out(logits.size());
  parallel_for(logits.size(), jobs, [&](std::size_t i) { out[i] = method.decode(logits[i]); });
  return out;
}

inline WordSeq plain_words(const ColoredTranscript& t) {
  WordSeq out;
  for (const auto& w : t.words) out.push_back(w.word);
  return out;
}

inline EvalRow score_transcripts(const std::string& name, const std::vector<Utterance>& utts,
                                 const std::vector<ColoredTranscript>& hyps) {
  std::vector<WordSeq> refs, words;
  std::vector<std::vector<bool>> masks;
  bool all_masked = !utts.empty();
  for (std::size_t i = 0; i < utts.size(); ++i) {
    refs.push_back(utts[i].reference);
    words.push_back(plain_words(hyps[i]));
    if (utts[i].jargon_mask) masks.push_back(*utts[i].jargon_mask);
    else all_masked = false;
  }
  EvalRow row;
  row.method = name;
  row.cer = cer(refs, words);
  row.wer = wer(refs, words);
  if (all_masked) row.jargon_wer = jargon_wer(refs, masks, words);
  row.utterance_count = utts.size();
  return row;
}

// --- Grid search -------------------------------------------------------------

struct GridSpec {
  std::vector<double> alpha{0.5, 0.75, 1.0, 1.25, 1.5};
  std::vector<double> beta{0.5, 0.75, 1.0, 1.25, 1.5};
  std::vector<double> lambda{0.25, 0.5, 0.75};
  std::vector<double> unknown_word{-10.0, -50.0};
  // nullopt disables off-lexicon extensions.
  std::vector<std::optional<double>> unknown_subword{-7.0, -5.0, -3.0, -1.0, 0.0};
  std::vector<int> bins{53, 100};

  void validate() const {
    if (alpha.empty() || beta.empty() || lambda.empty() || unknown_word.empty() ||
        unknown_subword.empty() || bins.empty()) {
      throw InvalidConfig("grid value lists must be nonempty");
    }
  }

  // Language models whose unknown-word penalty matters for `kind`.
  static std::vector<std::size_t> penalised_lms(FusionKind kind, std::size_t num_lms) {
    switch (kind) {
      case FusionKind::kGeneral:
        return {0};
      case FusionKind::kJargon:
        return {1};
      default: {
        std::vector<std::size_t> all(std::max<std::size_t>(num_lms, 2));
        std::iota(all.begin(), all.end(), 0);
        if (kind == FusionKind::kColoring) all.resize(num_lms);
        return all;
      }
    }
  }

  // The cross product for one method, in a fixed nesting order.
  std::vector<MethodConfig> expand(FusionKind kind, const MethodConfig& base,
                                   std::size_t num_lms) const {
    validate();
    const bool uses_lambda = kind == FusionKind::kLinear || kind == FusionKind::kLogLinear;
    const bool uses_bins = kind == FusionKind::kBins;
    const std::vector<double> lambdas = uses_lambda ? lambda : std::vector<double>{base.scorer.lambda};
    const std::vector<int> bin_counts = uses_bins ? bins : std::vector<int>{base.num_bins};
    const auto lms = penalised_lms(kind, num_lms);
    const std::size_t slots = lms.empty() ? 0 : *std::max_element(lms.begin(), lms.end()) + 1;

    std::vector<std::vector<double>> penalties;
    std::vector<std::size_t> digits(lms.size(), 0);
    while (true) {
      std::vector<double> p(slots, unknown_word.front());
      for (std::size_t i = 0; i < lms.size(); ++i) p[lms[i]] = unknown_word[digits[i]];
      penalties.push_back(std::move(p));
      std::size_t i = lms.size();
      while (i > 0 && ++digits[i - 1] == unknown_word.size()) digits[--i] = 0;
      if (i == 0) break;
    }

    std::vector<MethodConfig> out;
    for (double a : alpha) {
      for (double b : beta) {
        for (double l : lambdas) {
          for (const auto& uw : penalties) {
            for (const auto& us : unknown_subword) {
              for (int nb : bin_counts) {
                MethodConfig m = base;
                m.kind = kind;
                m.scorer.alpha = a;
                m.scorer.beta = b;
                m.scorer.lambda = l;
                m.scorer.unknown_word_penalty = uw;
                m.scorer.unknown_subword_penalty = us;
                m.num_bins = nb;
                out.push_back(std::move(m));
              }
            }
          }
        }
      }
    }
    return out;
  }
};

struct GridRow {
  MethodConfig config;
  EvalRow result;
};

struct GridOutcome {
  std::vector<GridRow> rows;
  std::size_t best = 0;
  const GridRow& best_row() const { return rows.at(best); }
};

// Lowest WER wins, then lowest CER, then the earliest grid point.
inline std::size_t select_best(const std::vector<GridRow>& rows) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i].result;
    const auto& b = rows[best].result;
    if (a.wer < b.wer || (a.wer == b.wer && a.cer < b.cer)) best = i;
  }
  return best;
}

// Evaluates every configuration on `corpus`. Bin tables are fitted once per
// bin count from `calibration_refs` (the corpus references when empty).
inline GridOutcome grid_search(FusionKind kind, const GridSpec& grid,
                               const LanguageResources& res, const MethodConfig& base,
                               const Corpus& corpus, unsigned jobs,
                               std::span<const WordSeq> calibration_refs = {},
                               const std::function<void(const GridRow&)>& on_row = {}) {
  const auto configs = grid.expand(kind, base, res.lms.size());
  const auto corpus_refs = corpus.references();
  if (calibration_refs.empty()) calibration_refs = corpus_refs;
  std::map<std::pair<int, std::vector<double>>, BinTable> tables;
  GridOutcome out;
  for (const auto& cfg : configs) {
    std::optional<BinTable> bins;
    if (kind == FusionKind::kBins) {
      const auto key = std::make_pair(cfg.num_bins, cfg.scorer.unknown_word_penalty);
      auto it = tables.find(key);
      if (it == tables.end()) {
        it = tables.emplace(key, fit_bins_for(res, cfg.scorer, calibration_refs, cfg.num_bins)).first;
      }
      bins = it->second;
    }
    const PreparedMethod method(res, cfg, bins);
    const auto hyps = decode_corpus(method, corpus.logits, jobs);
    out.rows.push_back({cfg, score_transcripts(std::string(to_string(kind)), corpus.utterances, hyps)});
    if (on_row) on_row(out.rows.back());
  }
  out.best = select_best(out.rows);
  return out;
}

// --- Reporting -----------------------------------------------------------------

inline nlohmann::ordered_json config_json(const MethodConfig& m) {
  nlohmann::ordered_json j;
  j["fusion"] = std::string(to_string(m.kind));
  j["alpha"] = m.scorer.alpha;
  j["beta"] = m.scorer.beta;
  j["lambda"] = m.scorer.lambda;
  j["unk_word_penalty"] = m.scorer.unknown_word_penalty;
  if (m.scorer.unknown_subword_penalty) {
    j["unk_subword_penalty"] = *m.scorer.unknown_subword_penalty;
  } else {
    j["unk_subword_penalty"] = nullptr;
  }
  j["bins"] = m.num_bins;
  j["beam_width"] = m.decoder.beam_width;
  return j;
}

inline nlohmann::ordered_json row_json(const EvalRow& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["cer"] = r.cer;
  j["wer"] = r.wer;
  if (r.jargon_wer) {
    j["jargon_wer"] = *r.jargon_wer;
  } else {
    j["jargon_wer"] = nullptr;
  }
  j["utterances"] = r.utterance_count;
  return j;
}

inline nlohmann::ordered_json report_json(const EvalReport& report) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  nlohmann::ordered_json j;
  j["rows"] = rows;
  return j;
}

inline std::string format_report(const EvalReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %11s %6s\n", "method", "CER", "WER",
                "jargon-WER", "utts");
  out += buf;
  for (const auto& r : report.rows) {
    char jw[32];
    if (r.jargon_wer) std::snprintf(jw, sizeof jw, "%.2f", *r.jargon_wer);
    else std::snprintf(jw, sizeof jw, "-");
    std::snprintf(buf, sizeof buf, "%-10s %8.2f %8.2f %11s %6zu\n", r.method.c_str(), r.cer,
                  r.wer, jw, r.utterance_count);
    out += buf;
  }
  return out;
}

}  // namespace colordec

#endif  // COLORDEC_EVAL_HPP_
