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

// Error rates. All rates are pooled over the corpus: total edits divided by
// total reference length, in percent.

#ifndef COLORDEC_METRICS_HPP_
#define COLORDEC_METRICS_HPP_

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "colordec/colored_lexicon.hpp"
#include "colordec/common.hpp"

namespace colordec {

template <class Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

using WordSeq = std::vector<std::string>;

inline WordSeq split_words(std::string_view text) {
  WordSeq out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::string join_words(const WordSeq& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

inline double wer(std::span<const WordSeq> refs, std::span<const WordSeq> hyps) {
  if (refs.size() != hyps.size()) {
    throw LengthMismatch("wer: " + std::to_string(refs.size()) + " references vs " +
                         std::to_string(hyps.size()) + " hypotheses");
  }
  std::size_t edits = 0, length = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    edits += edit_distance(refs[i], hyps[i]);
    length += refs[i].size();
  }
  if (length == 0) return edits == 0 ? 0.0 : 100.0 * static_cast<double>(edits);
  return 100.0 * static_cast<double>(edits) / static_cast<double>(length);
}

// Character error rate over the space-joined word sequences; separators count
// as characters.
inline double cer(std::span<const WordSeq> refs, std::span<const WordSeq> hyps) {
  if (refs.size() != hyps.size()) {
    throw LengthMismatch("cer: " + std::to_string(refs.size()) + " references vs " +
                         std::to_string(hyps.size()) + " hypotheses");
  }
  std::size_t edits = 0, length = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto r = utf8_chars(join_words(refs[i]));
    const auto h = utf8_chars(join_words(hyps[i]));
    edits += edit_distance(r, h);
    length += r.size();
  }
  if (length == 0) return edits == 0 ? 0.0 : 100.0 * static_cast<double>(edits);
  return 100.0 * static_cast<double>(edits) / static_cast<double>(length);
}

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

struct AlignedPair {
  EditOp op;
  // Index into the reference, absent for insertions.
  std::optional<std::size_t> ref;
  std::optional<std::size_t> hyp;
};

// One minimal edit script; ties prefer match/substitution, then deletion.
template <class Seq>
std::vector<AlignedPair> align(const Seq& ref, const Seq& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                           at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<AlignedPair> out;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      out.push_back({ref[i - 1] == hyp[j - 1] ? EditOp::kMatch : EditOp::kSubstitute,
                     i - 1, j - 1});
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.push_back({EditOp::kDelete, i - 1, std::nullopt});
      --i;
    } else {
      out.push_back({EditOp::kInsert, std::nullopt, j - 1});
      --j;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Error rate restricted to reference words flagged as jargon. Returns nothing
// when the references contain no jargon words.
inline std::optional<double> jargon_wer(std::span<const WordSeq> refs,
                                        std::span<const std::vector<bool>> jargon_masks,
                                        std::span<const WordSeq> hyps) {
  if (refs.size() != hyps.size() || refs.size() != jargon_masks.size()) {
    throw LengthMismatch("jargon_wer: reference, mask and hypothesis counts differ");
  }
  std::size_t errors = 0, total = 0;
  for (std::size_t u = 0; u < refs.size(); ++u) {
    if (jargon_masks[u].size() != refs[u].size()) {
      throw LengthMismatch("jargon mask length differs from reference length");
    }
    for (const auto& col : align(refs[u], hyps[u])) {
      if (!col.ref || !jargon_masks[u][*col.ref]) continue;
      ++total;
      if (col.op != EditOp::kMatch) ++errors;
    }
  }
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(errors) / static_cast<double>(total);
}

struct EvalRow {
  std::string method;
  double cer = 0.0;
  double wer = 0.0;
  std::optional<double> jargon_wer;
  std::size_t utterance_count = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

}  // namespace colordec

#endif  // COLORDEC_METRICS_HPP_
