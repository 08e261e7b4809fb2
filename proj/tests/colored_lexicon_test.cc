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

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <gtest/gtest.h>

#include "colordec/colored_lexicon.hpp"
#include "colordec/synth.hpp"
#include "support/test_util.hpp"

namespace colordec {
namespace {

using Chars = std::vector<ColoredChar>;

ColoredChar cc(const ColoredAlphabet& a, const char* ch, std::uint32_t color) {
  return {a.char_column(ch), ColorId(color)};
}

Chars sorted(Chars v) {
  std::sort(v.begin(), v.end());
  return v;
}

class TwoColorTest : public ::testing::Test {
 protected:
  TwoColorTest() : alphabet_(ColoredAlphabet::from_string(" ab", 2)) {
    const std::vector<std::string> g{"ab"}, j{"ba"};
    tries_.push_back(build_trie(ColorId(0), g, alphabet_));
    tries_.push_back(build_trie(ColorId(1), j, alphabet_));
  }
  ColoredAlphabet alphabet_;
  std::vector<LexiconTrie> tries_;
};

TEST_F(TwoColorTest, BoundaryOffersFirstLettersOfEveryLexicon) {
  const auto next = get_next_chars(alphabet_, tries_, WordCursor{}, false);
  EXPECT_EQ(sorted(next),
            sorted({cc(alphabet_, "a", 0), cc(alphabet_, "b", 1), cc(alphabet_, " ", 0)}));
}

TEST_F(TwoColorTest, MidWordStaysInTheWordsColor) {
  WordCursor cur = advance(tries_, alphabet_.separator(), WordCursor{}, cc(alphabet_, "a", 0));
  EXPECT_EQ(get_next_chars(alphabet_, tries_, cur, false), (Chars{cc(alphabet_, "b", 0)}));
  cur = advance(tries_, alphabet_.separator(), cur, cc(alphabet_, "b", 0));
  // "ab" is a word: only the separator may follow, still in color 0.
  EXPECT_EQ(get_next_chars(alphabet_, tries_, cur, false), (Chars{cc(alphabet_, " ", 0)}));
}

TEST_F(TwoColorTest, SeparatorInheritsTheCompletedWordsColor) {
  WordCursor cur{};
  for (const char* ch : {"b", "a"}) {
    cur = advance(tries_, alphabet_.separator(), cur, cc(alphabet_, ch, 1));
  }
  const auto next = get_next_chars(alphabet_, tries_, cur, false);
  ASSERT_EQ(next, (Chars{cc(alphabet_, " ", 1)}));
  cur = advance(tries_, alphabet_.separator(), cur, next[0]);
  EXPECT_TRUE(cur.at_boundary());
  EXPECT_EQ(cur.color, ColorId(1));
  const auto boundary = get_next_chars(alphabet_, tries_, cur, false);
  EXPECT_NE(std::find(boundary.begin(), boundary.end(), cc(alphabet_, " ", 1)), boundary.end());
}

TEST_F(TwoColorTest, OffLexiconOffersAllSameColorLetters) {
  const WordCursor cur =
      advance(tries_, alphabet_.separator(), WordCursor{}, cc(alphabet_, "a", 0));
  EXPECT_EQ(sorted(get_next_chars(alphabet_, tries_, cur, true)),
            sorted({cc(alphabet_, "a", 0), cc(alphabet_, "b", 0), cc(alphabet_, " ", 0)}));
  // "aa" has left the trie; still same color only.
  const WordCursor off = advance(tries_, alphabet_.separator(), cur, cc(alphabet_, "a", 0));
  EXPECT_FALSE(off.node.has_value());
  EXPECT_EQ(sorted(get_next_chars(alphabet_, tries_, off, true)),
            sorted({cc(alphabet_, "a", 0), cc(alphabet_, "b", 0), cc(alphabet_, " ", 0)}));
  EXPECT_TRUE(get_next_chars(alphabet_, tries_, off, false).empty());
}

TEST(GetNextCharsTest, FullLexiconWithOneColorIsUnconstrained) {
  const auto alphabet = ColoredAlphabet::from_string(" abc", 1);
  std::vector<std::string> words;
  for (const char* a : {"a", "b", "c"}) {
    words.push_back(a);
    for (const char* b : {"a", "b", "c"}) {
      words.push_back(std::string(a) + b);
      for (const char* c : {"a", "b", "c"}) words.push_back(std::string(a) + b + c);
    }
  }
  const std::vector<LexiconTrie> tries{build_trie(ColorId(0), words, alphabet)};
  WordCursor cur{};
  for (const char* ch : {"a", "c", "b"}) {
    EXPECT_EQ(get_next_chars(alphabet, tries, cur, false).size(), alphabet.size());
    cur = advance(tries, alphabet.separator(), cur, cc(alphabet, ch, 0));
  }
}

TEST(GetNextCharsTest, EmptyLexiconContributesNoFirstLetters) {
  const auto alphabet = ColoredAlphabet::from_string(" ab", 2);
  const std::vector<std::string> g{"a"};
  const std::vector<LexiconTrie> tries{build_trie(ColorId(0), g, alphabet),
                                       build_trie(ColorId(1), {}, alphabet)};
  EXPECT_EQ(sorted(get_next_chars(alphabet, tries, WordCursor{}, false)),
            sorted({cc(alphabet, "a", 0), cc(alphabet, " ", 0)}));
}

TEST(GetNextCharsTest, MidWordBranchingNeverExceedsK) {
  const auto alphabet = ColoredAlphabet::from_string(" abcd", 3);
  SynthRng rng(4);
  std::vector<LexiconTrie> tries;
  for (std::uint32_t c = 0; c < 3; ++c) {
    std::vector<std::string> words;
    for (int i = 0; i < 30; ++i) {
      std::string w;
      for (std::size_t n = 1 + rng.below(4); n > 0; --n) w += "abcd"[rng.below(4)];
      words.push_back(w);
    }
    tries.push_back(build_trie(ColorId(c), words, alphabet));
  }
  std::function<void(const WordCursor&, int)> rec = [&](const WordCursor& cur, int depth) {
    for (bool off : {false, true}) {
      const auto next = get_next_chars(alphabet, tries, cur, off);
      if (!cur.at_boundary()) {
        EXPECT_LE(next.size(), alphabet.size());
        for (const auto& ch : next) EXPECT_EQ(ch.color, cur.color);
      }
    }
    if (depth == 4) return;
    for (const auto& ch : get_next_chars(alphabet, tries, cur, false)) {
      rec(advance(tries, alphabet.separator(), cur, ch), depth + 1);
    }
  };
  rec(WordCursor{}, 0);
}

TEST(CharColumnTest, PositionalAndSharedAcrossColors) {
  const auto alphabet = ColoredAlphabet(std::vector<std::string>{"a", "b", "c", " "}, 2);
  EXPECT_EQ(alphabet.char_column("b"), 1u);
  EXPECT_EQ(alphabet.char_column(ColoredChar{1, ColorId(0)}),
            alphabet.char_column(ColoredChar{1, ColorId(1)}));
  EXPECT_EQ(alphabet.blank_index(), 4u);
  EXPECT_THROW(alphabet.char_column("-"), UnknownChar);
  EXPECT_THROW(alphabet.char_column("<blank>"), UnknownChar);
}

TEST(ColoredAlphabetTest, RejectsBadDefinitions) {
  EXPECT_THROW(ColoredAlphabet(std::vector<std::string>{"a", "a", " "}, 1), InvalidConfig);
  EXPECT_THROW(ColoredAlphabet(std::vector<std::string>{"a", "b"}, 1), InvalidConfig);
  EXPECT_THROW(ColoredAlphabet(std::vector<std::string>{"a", " "}, 0), InvalidConfig);
}

TEST(ColoredAlphabetTest, HandlesMultibyteCharacters) {
  const auto alphabet = ColoredAlphabet::from_string(" aé", 1);
  EXPECT_EQ(alphabet.size(), 3u);
  EXPECT_EQ(alphabet.encode("éa"), (std::vector<std::uint32_t>{2, 1}));
}

TEST(BuildTrieTest, PrefixWordAndExtension) {
  const auto alphabet = ColoredAlphabet::from_string(" ab", 1);
  const std::vector<std::string> words{"ab", "a"};
  const auto trie = build_trie(ColorId(0), words, alphabet);
  const auto a = trie.walk(alphabet.encode("a"));
  ASSERT_TRUE(a.has_value());
  EXPECT_TRUE(trie.node(*a).word_final);
  EXPECT_EQ(trie.node(*a).word, "a");
  const auto ab = trie.child(*a, alphabet.char_column("b"));
  ASSERT_TRUE(ab.has_value());
  EXPECT_TRUE(trie.node(*ab).word_final);
  EXPECT_EQ(trie.word_count(), 2u);
}

TEST(BuildTrieTest, EmptyListAcceptsNothing) {
  const auto alphabet = ColoredAlphabet::from_string(" ab", 1);
  const auto trie = build_trie(ColorId(0), {}, alphabet);
  EXPECT_EQ(trie.node_count(), 1u);
  EXPECT_FALSE(trie.contains(alphabet.encode("a")));
}

TEST(BuildTrieTest, RejectsInvalidWords) {
  const auto alphabet = ColoredAlphabet::from_string(" ab", 1);
  for (const char* bad : {"abc", "a b", ""}) {
    const std::vector<std::string> words{bad};
    EXPECT_THROW(build_trie(ColorId(0), words, alphabet), InvalidWordChar) << bad;
  }
}

TEST(BuildTrieTest, MembershipMatchesHashSet) {
  const auto alphabet = ColoredAlphabet::from_string(" abcde", 1);
  SynthRng rng(99);
  auto random_word = [&] {
    std::string w;
    for (std::size_t n = 1 + rng.below(6); n > 0; --n) w += "abcde"[rng.below(5)];
    return w;
  };
  std::vector<std::string> words;
  for (int i = 0; i < 1000; ++i) words.push_back(random_word());
  const std::unordered_set<std::string> set(words.begin(), words.end());
  const auto trie = build_trie(ColorId(0), words, alphabet);
  EXPECT_EQ(trie.word_count(), set.size());
  for (int i = 0; i < 10000; ++i) {
    const auto probe = random_word();
    EXPECT_EQ(trie.contains(alphabet.encode(probe)), set.count(probe) > 0) << probe;
  }
  // Trie nodes are in bijection with distinct nonempty prefixes, plus the root.
  std::set<std::string> prefixes;
  for (const auto& w : words) {
    for (std::size_t n = 1; n <= w.size(); ++n) prefixes.insert(w.substr(0, n));
  }
  EXPECT_EQ(trie.node_count(), prefixes.size() + 1);
  for (const auto& p : prefixes) EXPECT_TRUE(trie.walk(alphabet.encode(p)).has_value());
}

TEST(ReadLexiconFileTest, LowerCasesAndSkipsBlankLines) {
  testing::TempDir dir("lexicon");
  testing::write_file(dir / "lex.txt", "Fever\n\n  Clozaril \r\nhe\n");
  EXPECT_EQ(read_lexicon_file((dir / "lex.txt").string()),
            (std::vector<std::string>{"fever", "clozaril", "he"}));
  EXPECT_THROW(read_lexicon_file((dir / "missing.txt").string()), IoFailure);
}

}  // namespace
}  // namespace colordec
