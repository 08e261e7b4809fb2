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

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "colordec/ngram_lm.hpp"
#include "colordec/synth.hpp"

namespace colordec {
namespace {

constexpr char kBigramFixture[] =
    "\\data\\\n"
    "ngram 1=4\n"
    "ngram 2=4\n"
    "\n"
    "\\1-grams:\n"
    "-0.6\tthe\t-0.3\n"
    "-0.7\tcat\t-0.25\n"
    "-0.9\tsat\t-0.2\n"
    "-0.5\t</s>\n"
    "\n"
    "\\2-grams:\n"
    "-0.1\tthe cat\n"
    "-0.2\tcat sat\n"
    "-0.3\tsat </s>\n"
    "-1.3\tthe the\n"
    "\n"
    "\\end\\\n";

TEST(ParseArpaTest, SingleUnigram) {
  const auto lm = parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.3\ta\n\n\\end\\\n");
  EXPECT_EQ(lm.max_order(), 1);
  EXPECT_EQ(lm.vocabulary_size(), 1u);
  EXPECT_DOUBLE_EQ(lm.score_word(LmState{}, "a", nullptr, -10.0).log10_prob, -0.3);
}

TEST(ParseArpaTest, HeaderCountMismatchIsRejected) {
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=2\n\n\\1-grams:\n-0.3\ta\n\n\\end\\\n"),
               MalformedArpa);
}

TEST(ParseArpaTest, ErrorsCarryLineNumbers) {
  try {
    parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\nabc\ta\n\n\\end\\\n");
    FAIL() << "expected MalformedArpa";
  } catch (const MalformedArpa& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(ParseArpaTest, RejectsStructuralProblems) {
  // No \end\ marker.
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.3\ta\n"), MalformedArpa);
  // Missing section.
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=1\nngram 2=1\n\n\\1-grams:\n-0.3\ta\n\n\\end\\\n"),
               MalformedArpa);
  // Positive log probability.
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n0.5\ta\n\n\\end\\\n"),
               MalformedArpa);
  // Bigram whose context has no unigram.
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=1\nngram 2=1\n\n\\1-grams:\n-0.3\ta\n\n"
                          "\\2-grams:\n-0.1\tb a\n\n\\end\\\n"),
               MalformedArpa);
  // Backoff on the highest order.
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=1\nngram 2=1\n\n\\1-grams:\n-0.3\ta\t-0.1\n\n"
                          "\\2-grams:\n-0.1\ta a\t-0.2\n\n\\end\\\n"),
               MalformedArpa);
  // Empty input.
  EXPECT_THROW(parse_arpa(""), MalformedArpa);
}

TEST(ParseArpaTest, IgnoresPreambleText) {
  const auto lm =
      parse_arpa("some tool banner\n\n\\data\\\nngram 1=1\n\n\\1-grams:\n-0.3\ta\n\n\\end\\\n");
  EXPECT_EQ(lm.vocabulary_size(), 1u);
}

TEST(ParseArpaTest, RoundTripIsBitIdentical) {
  const auto lm = parse_arpa(kBigramFixture);
  const std::string text = lm.to_arpa();
  const auto again = parse_arpa(text);
  EXPECT_EQ(again.to_arpa(), text);
  for (const auto* h : {"the", "cat", "sat", "</s>"}) {
    for (const auto* w : {"the", "cat", "sat", "</s>"}) {
      LmState s1, s2;
      lm.score_word(LmState{}, h, &s1, -10.0);
      again.score_word(LmState{}, h, &s2, -10.0);
      EXPECT_EQ(lm.score_word(s1, w, nullptr, -10.0).log10_prob,
                again.score_word(s2, w, nullptr, -10.0).log10_prob);
    }
  }
}

TEST(ParseArpaTest, RoundTripPreservesUnusualValues) {
  NGramModel lm;
  lm.add_ngram(std::vector<std::string>{"x"}, -0.1234567890123456789, -1e-300);
  lm.add_ngram(std::vector<std::string>{"y"}, -99.0, std::nullopt);
  lm.add_ngram(std::vector<std::string>{"x", "y"}, -1.0 / 3.0, std::nullopt);
  const auto again = parse_arpa(lm.to_arpa());
  ASSERT_EQ(again.entries(1).size(), 2u);
  EXPECT_EQ(again.entries(1)[0].log10_prob, lm.entries(1)[0].log10_prob);
  EXPECT_EQ(*again.entries(1)[0].backoff_log10, -1e-300);
  EXPECT_EQ(again.entries(2)[0].log10_prob, -1.0 / 3.0);
}

TEST(ScoreWordTest, BacksOffThroughContextWeight) {
  NGramModel lm;
  lm.add_ngram(std::vector<std::string>{"a"}, -0.4, -0.2);
  lm.add_ngram(std::vector<std::string>{"b"}, -0.5, std::nullopt);
  lm.add_ngram(std::vector<std::string>{"b", "a"}, -0.3, std::nullopt);
  LmState after_a;
  lm.score_word(LmState{}, "a", &after_a, -10.0);
  EXPECT_NEAR(lm.score_word(after_a, "b", nullptr, -10.0).log10_prob, -0.7, 1e-12);
}

TEST(ScoreWordTest, ExplicitBigramIgnoresBackoff) {
  NGramModel lm;
  lm.add_ngram(std::vector<std::string>{"a"}, -0.4, -0.2);
  lm.add_ngram(std::vector<std::string>{"b"}, -0.5, std::nullopt);
  lm.add_ngram(std::vector<std::string>{"a", "b"}, -0.1, std::nullopt);
  LmState after_a;
  lm.score_word(LmState{}, "a", &after_a, -10.0);
  EXPECT_DOUBLE_EQ(lm.score_word(after_a, "b", nullptr, -10.0).log10_prob, -0.1);
}

TEST(ScoreWordTest, OutOfVocabularyGetsPenalty) {
  const auto lm = parse_arpa(kBigramFixture);
  const auto s = lm.score_word(LmState{}, "dog", nullptr, -10.0);
  EXPECT_DOUBLE_EQ(s.log10_prob, -10.0);
  EXPECT_TRUE(s.oov);
  EXPECT_DOUBLE_EQ(lm.score_word(LmState{}, "dog", nullptr, -50.0).log10_prob, -50.0);
}

TEST(ScoreWordTest, StateKeepsOrderMinusOneWords) {
  const auto lm = parse_arpa(kBigramFixture);
  LmState s;
  for (const auto* w : {"the", "cat", "sat"}) {
    LmState next;
    lm.score_word(s, w, &next, -10.0);
    s = next;
  }
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(lm.word(s.context()[0]), "sat");
}

TEST(SentenceLogprobTest, EmptyAndSingleWord) {
  const auto lm = parse_arpa(kBigramFixture);
  EXPECT_EQ(lm.sentence_logprob({}, -10.0), 0.0);
  NGramModel uni;
  uni.add_ngram(std::vector<std::string>{"a"}, -0.25, std::nullopt);
  const std::vector<std::string> one{"a"};
  EXPECT_DOUBLE_EQ(uni.sentence_logprob(one, -10.0), -0.25);
}

// Katz backoff evaluated from the full explicit history, written without
// LmState: P(w | h) = P(h[-k:], w) * prod of backoffs of the longer contexts.
class NaiveBackoff {
 public:
  explicit NaiveBackoff(const NGramModel& lm) : order_(lm.max_order()) {
    for (int n = 1; n <= lm.max_order(); ++n) {
      for (const auto& e : lm.entries(n)) {
        std::vector<std::string> key;
        for (auto id : e.words) key.push_back(lm.word(id));
        table_[key] = {e.log10_prob, e.backoff_log10.value_or(0.0)};
      }
    }
  }

  double score(const std::vector<std::string>& history, const std::string& w,
               double unk) const {
    if (!table_.count({w})) return unk;
    const std::size_t max_ctx = std::min<std::size_t>(history.size(), order_ - 1);
    for (std::size_t k = max_ctx + 1; k-- > 0;) {
      std::vector<std::string> key(history.end() - static_cast<std::ptrdiff_t>(k), history.end());
      key.push_back(w);
      auto it = table_.find(key);
      if (it == table_.end()) continue;
      double total = it->second.first;
      for (std::size_t j = k + 1; j <= max_ctx; ++j) {
        std::vector<std::string> ctx(history.end() - static_cast<std::ptrdiff_t>(j), history.end());
        if (auto c = table_.find(ctx); c != table_.end()) total += c->second.second;
      }
      return total;
    }
    return unk;
  }

  double sentence(const std::vector<std::string>& words, double unk) const {
    double total = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      total += score({words.begin(), words.begin() + static_cast<std::ptrdiff_t>(i)}, words[i], unk);
    }
    return total;
  }

 private:
  int order_;
  std::map<std::vector<std::string>, std::pair<double, double>> table_;
};

// A random trigram model over `vocab` with consistent ARPA structure.
NGramModel random_trigram(const std::vector<std::string>& vocab, std::uint64_t seed) {
  SynthRng rng(seed);
  NGramModel lm;
  for (const auto& w : vocab) {
    lm.add_ngram(std::vector<std::string>{w}, -0.1 - 2.0 * rng.uniform(), -rng.uniform());
  }
  std::vector<std::vector<std::string>> bigrams;
  for (const auto& a : vocab) {
    for (const auto& b : vocab) {
      if (rng.uniform() < 0.5) {
        lm.add_ngram(std::vector<std::string>{a, b}, -2.0 * rng.uniform(), -rng.uniform());
        bigrams.push_back({a, b});
      }
    }
  }
  for (const auto& bg : bigrams) {
    for (const auto& c : vocab) {
      if (rng.uniform() < 0.4) {
        lm.add_ngram(std::vector<std::string>{bg[0], bg[1], c}, -2.0 * rng.uniform(), std::nullopt);
      }
    }
  }
  lm.validate();
  return lm;
}

TEST(SentenceLogprobTest, IncrementalEqualsFullHistory) {
  const auto lm = random_trigram({"w", "x", "y", "z"}, 11);
  const NaiveBackoff naive(lm);
  const std::vector<std::string> s{"x", "oov", "z"};
  EXPECT_NEAR(lm.sentence_logprob(s, -10.0), naive.sentence(s, -10.0), 1e-12);
}

// Exhaustive: every history of length <= 10 over a 4-token vocabulary, and
// every next token (plus one unknown), scored incrementally and naively.
TEST(LmStateTest, IncrementalScoringMatchesFullHistoryExhaustively) {
  const std::vector<std::string> vocab{"w", "x", "y", "z"};
  const auto lm = random_trigram(vocab, 5);
  const NaiveBackoff naive(lm);
  std::vector<std::string> history;
  std::size_t checked = 0, mismatches = 0;
  std::function<void(const LmState&)> rec = [&](const LmState& state) {
    for (const auto* w : {"w", "x", "y", "z", "q"}) {
      const double inc = lm.score_word(state, w, nullptr, -10.0).log10_prob;
      const double full = naive.score(history, w, -10.0);
      ++checked;
      if (std::abs(inc - full) > 1e-12) ++mismatches;
    }
    if (history.size() == 10) return;
    for (const auto& w : vocab) {
      LmState next;
      lm.score_word(state, w, &next, -10.0);
      history.push_back(w);
      rec(next);
      history.pop_back();
    }
  };
  rec(LmState{});
  EXPECT_EQ(checked, 5u * ((1u << 22) - 1) / 3);
  EXPECT_EQ(mismatches, 0u);
}

TEST(MergeColoredTest, KeepsSameWordApartByColor) {
  NGramModel g, j;
  g.add_ngram(std::vector<std::string>{"a"}, -0.3, std::nullopt);
  j.add_ngram(std::vector<std::string>{"a"}, -0.9, std::nullopt);
  const std::vector<ColoredModelRef> refs{{&g, ColorId(0)}, {&j, ColorId(1)}};
  const auto merged = merge_colored(refs);
  ASSERT_EQ(merged.vocabulary_size(), 2u);
  EXPECT_DOUBLE_EQ(merged.score_word(LmState{}, "0:a", nullptr, -10.0).log10_prob, -0.3);
  EXPECT_DOUBLE_EQ(merged.score_word(LmState{}, "1:a", nullptr, -10.0).log10_prob, -0.9);
  EXPECT_EQ(merged.color(*merged.find("1:a")), ColorId(1));
}

TEST(MergeColoredTest, DuplicateColoredTokenIsRejected) {
  NGramModel g;
  g.add_ngram(std::vector<std::string>{"a"}, -0.3, std::nullopt);
  const std::vector<ColoredModelRef> refs{{&g, ColorId(0)}, {&g, ColorId(0)}};
  EXPECT_THROW(merge_colored(refs), DuplicateColoredToken);
}

TEST(MergeColoredTest, SingleModelIsColoredCopy) {
  const auto lm = parse_arpa(kBigramFixture);
  const std::vector<ColoredModelRef> refs{{&lm, ColorId(0)}};
  const auto merged = merge_colored(refs);
  ASSERT_EQ(merged.max_order(), lm.max_order());
  for (int n = 1; n <= lm.max_order(); ++n) {
    ASSERT_EQ(merged.entries(n).size(), lm.entries(n).size());
    for (std::size_t i = 0; i < lm.entries(n).size(); ++i) {
      const auto& a = lm.entries(n)[i];
      const auto& b = merged.entries(n)[i];
      EXPECT_EQ(a.log10_prob, b.log10_prob);
      EXPECT_EQ(a.backoff_log10, b.backoff_log10);
      for (std::size_t k = 0; k < a.words.size(); ++k) {
        EXPECT_EQ("0:" + lm.word(a.words[k]), merged.word(b.words[k]));
      }
    }
  }
  EXPECT_EQ(parse_arpa(merged.to_arpa()).to_arpa(), merged.to_arpa());
}

TEST(MergeColoredTest, PureColorTrigramQueriesMatchSourceModels) {
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  const auto g = random_trigram(vocab, 21);
  const auto j = random_trigram({"a", "c", "e"}, 22);
  const std::vector<ColoredModelRef> refs{{&g, ColorId(0)}, {&j, ColorId(1)}};
  const auto merged = merge_colored(refs);
  SynthRng rng(3);
  for (int q = 0; q < 100; ++q) {
    const bool gen = rng.uniform() < 0.5;
    const auto& src = gen ? g : j;
    const auto& words = gen ? vocab : std::vector<std::string>{"a", "c", "e"};
    const std::string tag = gen ? "0:" : "1:";
    std::vector<std::string> seq, colored;
    for (int i = 0; i < 3; ++i) {
      seq.push_back(words[rng.below(words.size())]);
      colored.push_back(tag + seq.back());
    }
    EXPECT_EQ(merged.sentence_logprob(colored, -10.0), src.sentence_logprob(seq, -10.0));
  }
}

TEST(MergeColoredTest, MixedHistoryBacksOff) {
  NGramModel g, j;
  g.add_ngram(std::vector<std::string>{"a"}, -0.3, -0.5);
  g.add_ngram(std::vector<std::string>{"a", "a"}, -0.1, std::nullopt);
  j.add_ngram(std::vector<std::string>{"b"}, -0.6, -0.25);
  j.add_ngram(std::vector<std::string>{"b", "b"}, -0.2, std::nullopt);
  const std::vector<ColoredModelRef> refs{{&g, ColorId(0)}, {&j, ColorId(1)}};
  const auto merged = merge_colored(refs);
  LmState s;
  merged.score_word(LmState{}, "0:a", &s, -10.0);
  EXPECT_DOUBLE_EQ(merged.score_word(s, "0:a", nullptr, -10.0).log10_prob, -0.1);
  EXPECT_NEAR(merged.score_word(s, "1:b", nullptr, -10.0).log10_prob, -0.5 + -0.6, 1e-15);
}

TEST(SplitColoredTokenTest, ParsesWireFormat) {
  auto [c, w] = split_colored_token("1:fever");
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->value, 1u);
  EXPECT_EQ(w, "fever");
  EXPECT_FALSE(split_colored_token("fever").first.has_value());
  EXPECT_FALSE(split_colored_token("x:y").first.has_value());
  EXPECT_EQ(colored_token(ColorId(3), "a"), "3:a");
}

}  // namespace
}  // namespace colordec
