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

// Text scorers consumed by the decoder. Each scorer turns a completed word
// into an additive log10 delta of the beam's text score:
//
//   delta = alpha * log10 P(word | history) + beta
//
// The coloring scorer evaluates P(color) * P_merged(color:word | colored
// history) against the merged colored model. The remaining kinds combine a
// general and a jargon model, each queried with its own uncolored history.

#ifndef COLORDEC_FUSION_SCORERS_HPP_
#define COLORDEC_FUSION_SCORERS_HPP_

#include <array>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "colordec/common.hpp"
#include "colordec/ngram_lm.hpp"

namespace colordec {

enum class FusionKind { kGeneral, kJargon, kLinear, kLogLinear, kBins, kBayes, kColoring };

inline constexpr std::array<std::pair<FusionKind, std::string_view>, 7> kFusionNames{{
    {FusionKind::kGeneral, "general"},
    {FusionKind::kJargon, "jargon"},
    {FusionKind::kLinear, "linear"},
    {FusionKind::kLogLinear, "loglinear"},
    {FusionKind::kBins, "bins"},
    {FusionKind::kBayes, "bayes"},
    {FusionKind::kColoring, "coloring"},
}};

inline std::string_view to_string(FusionKind kind) {
  for (const auto& [k, name] : kFusionNames) {
    if (k == kind) return name;
  }
  return "?";
}

inline std::optional<FusionKind> parse_fusion_kind(std::string_view name) {
  for (const auto& [k, n] : kFusionNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

// Kinds that decode with the per-color lexicons; all others see one lexicon.
inline bool uses_colors(FusionKind kind) { return kind == FusionKind::kColoring; }

struct ScorerConfig {
  double alpha = 1.0;
  double beta = 0.0;
  // log10 probability substituted for out-of-vocabulary words, one per LM.
  // A single value applies to every LM.
  std::vector<double> unknown_word_penalty{-10.0};
  // log10 cost per character of a partial word that has left the lexicon.
  // Disabled when empty.
  std::optional<double> unknown_subword_penalty;
  double lambda = 0.5;
  // P(color); empty means uniform.
  std::vector<double> color_prior;

  double unknown_penalty(std::size_t lm) const {
    if (unknown_word_penalty.empty()) return -10.0;
    return unknown_word_penalty[std::min(lm, unknown_word_penalty.size() - 1)];
  }

  void validate(std::size_t num_colors) const {
    if (!std::isfinite(alpha) || !std::isfinite(beta)) {
      throw InvalidConfig("alpha and beta must be finite");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw InvalidConfig("lambda must lie in [0, 1]");
    }
    if (!color_prior.empty()) {
      if (color_prior.size() != num_colors) {
        throw InvalidConfig("color prior has " + std::to_string(color_prior.size()) +
                            " entries for " + std::to_string(num_colors) + " colors");
      }
      double sum = 0.0;
      for (double p : color_prior) {
        if (!(p > 0.0)) throw InvalidConfig("color prior entries must be positive");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw InvalidConfig("color prior must sum to 1");
    }
  }
};

// --- Interpolation formulas --------------------------------------------------

inline double interp_linear(double p_general, double p_jargon, double lambda) {
  return lambda * p_jargon + (1.0 - lambda) * p_general;
}

// p_jargon^lambda * p_general^(1 - lambda), evaluated in log space.
inline double interp_loglinear(double p_general, double p_jargon, double lambda) {
  if (lambda == 0.0) return p_general;
  if (lambda == 1.0) return p_jargon;
  if (p_general <= 0.0 || p_jargon <= 0.0) return 0.0;
  return std::exp(lambda * std::log(p_jargon) + (1.0 - lambda) * std::log(p_general));
}

// Same formulas on log10 inputs. The endpoints return the selected input
// unchanged so single-LM equivalence is exact.
inline double log10_interp_linear(double lg, double lj, double lambda) {
  if (lambda == 0.0) return lg;
  if (lambda == 1.0) return lj;
  return log10_add(std::log10(lambda) + lj, std::log10(1.0 - lambda) + lg);
}

inline double log10_interp_loglinear(double lg, double lj, double lambda) {
  if (lambda == 0.0) return lg;
  if (lambda == 1.0) return lj;
  return lambda * lj + (1.0 - lambda) * lg;
}

// Posterior weight of each LM given how well it explained the history so
// far: w_j proportional to prior_j * P_j(history). Inputs are log10.
inline std::pair<double, double> bayes_weights(double log_hist_general,
                                               double log_hist_jargon,
                                               std::pair<double, double> prior) {
  if (log_hist_general == kLogZero && log_hist_jargon == kLogZero) {
    const double z = prior.first + prior.second;
    return {prior.first / z, prior.second / z};
  }
  const double lg = std::log10(prior.first) + log_hist_general;
  const double lj = std::log10(prior.second) + log_hist_jargon;
  const double z = log10_add(lg, lj);
  const double wg = std::pow(10.0, lg - z);
  return {wg, 1.0 - wg};
}

inline double interp_bayes(double p_general_history, double p_jargon_history,
                           double p_general_next, double p_jargon_next,
                           std::pair<double, double> prior = {0.5, 0.5}) {
  const auto [wg, wj] = bayes_weights(safe_log10(p_general_history),
                                      safe_log10(p_jargon_history), prior);
  if (wj == 0.0) return p_general_next;
  if (wg == 0.0) return p_jargon_next;
  return wg * p_general_next + wj * p_jargon_next;
}

// --- Bin estimation ------------------------------------------------------------

struct CalibrationPair {
  double log10_general = 0.0;
  double log10_jargon = 0.0;
  bool correct = false;
};

// Equal-width grid over (log10 P_G, log10 P_J). Each visited cell holds the
// add-one smoothed frequency of correct-word events; empty cells fall back to
// linear interpolation at lambda = 0.5. Lookups outside the fitted range clamp
// to the border cells.
class BinTable {
 public:
  BinTable(int num_bins, double g_min, double g_max, double j_min, double j_max)
      : num_bins_(num_bins), g_min_(g_min), g_max_(g_max), j_min_(j_min),
        j_max_(j_max),
        cells_(static_cast<std::size_t>(num_bins) * num_bins) {}

  int num_bins() const { return num_bins_; }
  std::pair<double, double> general_range() const { return {g_min_, g_max_}; }
  std::pair<double, double> jargon_range() const { return {j_min_, j_max_}; }

  std::pair<int, int> cell_of(double lg, double lj) const {
    return {axis_bin(lg, g_min_, g_max_), axis_bin(lj, j_min_, j_max_)};
  }

  const std::optional<double>& cell(int gi, int ji) const {
    return cells_[static_cast<std::size_t>(gi) * num_bins_ + ji];
  }
  std::optional<double>& cell(int gi, int ji) {
    return cells_[static_cast<std::size_t>(gi) * num_bins_ + ji];
  }

  double lookup(double lg, double lj) const {
    const auto [gi, ji] = cell_of(lg, lj);
    if (const auto& v = cell(gi, ji)) return *v;
    return log10_interp_linear(lg, lj, 0.5);
  }

 private:
  int axis_bin(double x, double lo, double hi) const {
    if (!(hi > lo)) return 0;
    const double pos = (x - lo) / (hi - lo) * num_bins_;
    if (!(pos > 0.0)) return 0;  // also catches -inf / NaN
    return std::min(static_cast<int>(pos), num_bins_ - 1);
  }

  int num_bins_;
  double g_min_, g_max_, j_min_, j_max_;
  std::vector<std::optional<double>> cells_;
};

inline BinTable fit_bin_table(std::span<const CalibrationPair> pairs, int num_bins) {
  if (pairs.empty()) throw EmptyCalibration("bin estimation needs calibration pairs");
  if (num_bins < 1) throw InvalidConfig("number of bins must be >= 1");
  double g_min = pairs[0].log10_general, g_max = g_min;
  double j_min = pairs[0].log10_jargon, j_max = j_min;
  for (const auto& p : pairs) {
    g_min = std::min(g_min, p.log10_general);
    g_max = std::max(g_max, p.log10_general);
    j_min = std::min(j_min, p.log10_jargon);
    j_max = std::max(j_max, p.log10_jargon);
  }
  BinTable table(num_bins, g_min, g_max, j_min, j_max);
  std::vector<std::pair<std::size_t, std::size_t>> counts(
      static_cast<std::size_t>(num_bins) * num_bins);
  for (const auto& p : pairs) {
    const auto [gi, ji] = table.cell_of(p.log10_general, p.log10_jargon);
    auto& c = counts[static_cast<std::size_t>(gi) * num_bins + ji];
    c.first += p.correct ? 1 : 0;
    ++c.second;
  }
  for (int gi = 0; gi < num_bins; ++gi) {
    for (int ji = 0; ji < num_bins; ++ji) {
      const auto& [hits, total] = counts[static_cast<std::size_t>(gi) * num_bins + ji];
      if (total == 0) continue;
      table.cell(gi, ji) = std::log10((hits + 1.0) / (total + 2.0));
    }
  }
  return table;
}

// --- Scorers ---------------------------------------------------------------------

// Per-hypothesis scoring state; owned by a single beam.
struct ScorerState {
  std::array<LmState, 2> lm;
  // log10 probability of the words so far under each LM (Bayes weights).
  std::array<double, 2> history{0.0, 0.0};

  bool operator==(const ScorerState&) const = default;
};

struct FusionModels {
  // Indexed by color: 0 is the general model, 1 the jargon model.
  std::vector<std::shared_ptr<const NGramModel>> lms;
  std::optional<BinTable> bins;
};

class FusionScorer {
 public:
  FusionKind kind() const { return kind_; }
  const ScorerConfig& config() const { return config_; }
  std::optional<double> subword_penalty() const { return config_.unknown_subword_penalty; }

  ScorerState initial_state() const { return {}; }

  // Combined log10 P(word | history) before alpha/beta, and the next state.
  // `in_lexicon == false` forces the out-of-vocabulary path in every LM.
  double word_log10_prob(const ScorerState& state, std::string_view word,
                         ColorId color, bool in_lexicon, ScorerState* next) const {
    *next = state;
    switch (kind_) {
      case FusionKind::kGeneral:
      case FusionKind::kJargon: {
        const std::size_t m = kind_ == FusionKind::kGeneral ? 0 : 1;
        return query(m, state.lm[0], word, in_lexicon, &next->lm[0]);
      }
      case FusionKind::kColoring: {
        const auto& vocab = color_vocab_[color.value];
        WordId id = kUnknownWord;
        if (in_lexicon) {
          if (auto it = vocab.find(std::string(word)); it != vocab.end()) id = it->second;
        }
        const double lp = merged_->score_word(state.lm[0], id, &next->lm[0],
                                              config_.unknown_penalty(color.value))
                              .log10_prob;
        return log_prior_[color.value] + lp;
      }
      default:
        break;
    }
    const double lg = query(0, state.lm[0], word, in_lexicon, &next->lm[0]);
    const double lj = query(1, state.lm[1], word, in_lexicon, &next->lm[1]);
    next->history = {state.history[0] + lg, state.history[1] + lj};
    switch (kind_) {
      case FusionKind::kLinear:
        return log10_interp_linear(lg, lj, config_.lambda);
      case FusionKind::kLogLinear:
        return log10_interp_loglinear(lg, lj, config_.lambda);
      case FusionKind::kBins:
        return bins_->lookup(lg, lj);
      case FusionKind::kBayes: {
        const auto [wg, wj] =
            bayes_weights(state.history[0], state.history[1], bayes_prior_);
        if (wj == 0.0) return lg;
        if (wg == 0.0) return lj;
        return log10_add(std::log10(wg) + lg, std::log10(wj) + lj);
      }
      default:
        return kLogZero;
    }
  }

  // Text-score delta for completing `word` with color `color`.
  double score_word(const ScorerState& state, std::string_view word, ColorId color,
                    bool in_lexicon, ScorerState* next) const {
    return config_.alpha * word_log10_prob(state, word, color, in_lexicon, next) +
           config_.beta;
  }

  const NGramModel* merged_model() const { return merged_.get(); }

  friend FusionScorer make_scorer(FusionKind kind, const FusionModels& models,
                                  const ScorerConfig& config);

 private:
  double query(std::size_t m, const LmState& state, std::string_view word,
               bool in_lexicon, LmState* next) const {
    const NGramModel& lm = *lms_[m];
    const WordId id = in_lexicon ? lm.id_or_unknown(word) : kUnknownWord;
    return lm.score_word(state, id, next, config_.unknown_penalty(m)).log10_prob;
  }

  FusionKind kind_ = FusionKind::kGeneral;
  ScorerConfig config_;
  std::vector<std::shared_ptr<const NGramModel>> lms_;
  std::shared_ptr<const NGramModel> merged_;
  std::vector<std::unordered_map<std::string, WordId>> color_vocab_;
  std::vector<double> log_prior_;
  std::pair<double, double> bayes_prior_{0.5, 0.5};
  std::optional<BinTable> bins_;
};

inline FusionScorer make_scorer(FusionKind kind, const FusionModels& models,
                                const ScorerConfig& config) {
  const std::size_t needed = kind == FusionKind::kGeneral    ? 1
                             : kind == FusionKind::kColoring ? 1
                                                             : 2;
  if (models.lms.size() < needed) {
    throw MissingModel(std::string(to_string(kind)) + " fusion needs " +
                       std::to_string(needed) + " language model(s), got " +
                       std::to_string(models.lms.size()));
  }
  for (const auto& lm : models.lms) {
    if (!lm) throw MissingModel("null language model");
  }
  FusionScorer s;
  s.kind_ = kind;
  s.config_ = config;
  s.lms_ = models.lms;
  if (kind == FusionKind::kColoring) {
    config.validate(models.lms.size());
    std::vector<ColoredModelRef> refs;
    for (std::size_t c = 0; c < models.lms.size(); ++c) {
      refs.push_back({models.lms[c].get(), ColorId(static_cast<std::uint32_t>(c))});
    }
    auto merged = std::make_shared<NGramModel>(merge_colored(refs));
    s.color_vocab_.resize(models.lms.size());
    for (WordId id = 0; id < merged->vocabulary_size(); ++id) {
      const auto [color, bare] = split_colored_token(merged->word(id));
      s.color_vocab_[color->value].emplace(std::string(bare), id);
    }
    s.merged_ = std::move(merged);
    const double c = static_cast<double>(models.lms.size());
    for (std::size_t i = 0; i < models.lms.size(); ++i) {
      s.log_prior_.push_back(config.color_prior.empty()
                                 ? std::log10(1.0 / c)
                                 : std::log10(config.color_prior[i]));
    }
  } else {
    config.validate(config.color_prior.empty() ? 0 : config.color_prior.size());
    if (kind == FusionKind::kBayes && config.color_prior.size() >= 2) {
      s.bayes_prior_ = {config.color_prior[0], config.color_prior[1]};
    }
  }
  if (kind == FusionKind::kBins) {
    if (!models.bins) throw MissingBinTable("bins fusion needs a fitted bin table");
    s.bins_ = models.bins;
  }
  return s;
}

}  // namespace colordec

#endif  // COLORDEC_FUSION_SCORERS_HPP_
