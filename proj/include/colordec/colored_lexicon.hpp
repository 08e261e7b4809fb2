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

// Colored alphabets and per-color lexicon tries.
//
// Every lexicon c gets its own copy of the character set; character l of
// color c and character l of color c' are distinct symbols that read the same
// acoustic column. Once the first letter of a word fixes its color, the rest
// of the word is constrained to that color's trie.

#ifndef COLORDEC_COLORED_LEXICON_HPP_
#define COLORDEC_COLORED_LEXICON_HPP_

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "colordec/common.hpp"

namespace colordec {

// Splits UTF-8 text into code points. Invalid lead bytes become single-byte
// units rather than errors.
inline std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

// ASCII lower-casing; other bytes pass through.
inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

inline constexpr std::string_view kDefaultAlphabet = " abcdefghijklmnopqrstuvwxyz'";

class ColoredAlphabet {
 public:
  ColoredAlphabet(std::vector<std::string> base_chars, std::uint32_t num_colors,
                  std::string_view separator = " ")
      : chars_(std::move(base_chars)), num_colors_(num_colors) {
    if (num_colors_ == 0) throw InvalidConfig("alphabet needs at least one color");
    if (chars_.empty()) throw InvalidConfig("alphabet is empty");
    for (std::uint32_t i = 0; i < chars_.size(); ++i) {
      if (!index_.emplace(chars_[i], i).second) {
        throw InvalidConfig("duplicate alphabet character '" + chars_[i] + "'");
      }
    }
    auto sep = index_.find(std::string(separator));
    if (sep == index_.end()) {
      throw InvalidConfig("word separator is not part of the alphabet");
    }
    separator_ = sep->second;
  }

  static ColoredAlphabet from_string(std::string_view chars,
                                     std::uint32_t num_colors) {
    return ColoredAlphabet(utf8_chars(chars), num_colors);
  }

  // K, the number of base characters. Acoustic matrices have K + 1 columns.
  std::size_t size() const { return chars_.size(); }
  std::uint32_t num_colors() const { return num_colors_; }
  std::uint32_t blank_index() const { return static_cast<std::uint32_t>(chars_.size()); }
  std::uint32_t separator() const { return separator_; }
  const std::string& base_char(std::uint32_t index) const { return chars_[index]; }
  std::span<const std::string> base_chars() const { return chars_; }

  std::optional<std::uint32_t> find(std::string_view ch) const {
    auto it = index_.find(std::string(ch));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Acoustic column of a base character. The same column serves every color.
  std::uint32_t char_column(std::string_view ch) const {
    if (auto i = find(ch)) return *i;
    throw UnknownChar("character '" + std::string(ch) +
                      "' is not in the alphabet");
  }
  std::uint32_t char_column(ColoredChar ch) const { return ch.index; }

  // Maps a word to base character indices.
  std::vector<std::uint32_t> encode(std::string_view text) const {
    std::vector<std::uint32_t> out;
    for (const auto& ch : utf8_chars(text)) out.push_back(char_column(ch));
    return out;
  }

  std::string decode(std::span<const std::uint32_t> indices) const {
    std::string out;
    for (auto i : indices) out += chars_[i];
    return out;
  }

 private:
  std::vector<std::string> chars_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint32_t num_colors_ = 1;
  std::uint32_t separator_ = 0;
};

class LexiconTrie {
 public:
  static constexpr std::uint32_t kRoot = 0;

  struct Node {
    // (base char index, child node), sorted by char index.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> children;
    bool word_final = false;
    std::string word;
  };

  explicit LexiconTrie(ColorId color) : color_(color), nodes_(1) {}

  ColorId color() const { return color_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t word_count() const { return word_count_; }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }

  std::optional<std::uint32_t> child(std::uint32_t node, std::uint32_t ch) const {
    const auto& kids = nodes_[node].children;
    auto it = std::lower_bound(
        kids.begin(), kids.end(), ch,
        [](const auto& kid, std::uint32_t c) { return kid.first < c; });
    if (it == kids.end() || it->first != ch) return std::nullopt;
    return it->second;
  }

  void insert(std::span<const std::uint32_t> chars, std::string word) {
    std::uint32_t cur = kRoot;
    for (auto ch : chars) {
      auto next = child(cur, ch);
      if (!next) {
        next = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        auto& kids = nodes_[cur].children;
        auto pos = std::lower_bound(
            kids.begin(), kids.end(), ch,
            [](const auto& kid, std::uint32_t c) { return kid.first < c; });
        kids.insert(pos, {ch, *next});
      }
      cur = *next;
    }
    if (!nodes_[cur].word_final) ++word_count_;
    nodes_[cur].word_final = true;
    nodes_[cur].word = std::move(word);
  }

  // Node reached by spelling `chars` from the root, if any.
  std::optional<std::uint32_t> walk(std::span<const std::uint32_t> chars) const {
    std::uint32_t cur = kRoot;
    for (auto ch : chars) {
      auto next = child(cur, ch);
      if (!next) return std::nullopt;
      cur = *next;
    }
    return cur;
  }

  bool contains(std::span<const std::uint32_t> chars) const {
    auto n = walk(chars);
    return n && nodes_[*n].word_final;
  }

 private:
  ColorId color_;
  std::vector<Node> nodes_;
  std::size_t word_count_ = 0;
};

inline LexiconTrie build_trie(ColorId color, std::span<const std::string> words,
                              const ColoredAlphabet& alphabet) {
  LexiconTrie trie(color);
  for (const auto& w : words) {
    if (w.empty()) throw InvalidWordChar("empty word in lexicon");
    std::vector<std::uint32_t> chars;
    for (const auto& ch : utf8_chars(w)) {
      auto idx = alphabet.find(ch);
      if (!idx || *idx == alphabet.separator()) {
        throw InvalidWordChar("word '" + w + "' uses character '" + ch +
                              "' outside the alphabet");
      }
      chars.push_back(*idx);
    }
    trie.insert(chars, w);
  }
  return trie;
}

// One word per line, lower-cased, blank lines ignored.
inline std::vector<std::string> read_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open lexicon '" + path + "'");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    words.push_back(to_lower(line.substr(start)));
  }
  return words;
}

// Where a hypothesis stands relative to the lexicons: inside a partial word
// (length > 0) of some color, or at a word boundary. At a boundary `color`
// is the color of the last completed word (0 before the first word).
struct WordCursor {
  std::uint32_t length = 0;
  ColorId color;
  // Trie node of the partial word; empty once the word has left the trie.
  std::optional<std::uint32_t> node = LexiconTrie::kRoot;

  bool at_boundary() const { return length == 0; }
  bool operator==(const WordCursor&) const = default;
};

// Characters that may follow the cursor, as (base char, color) pairs.
//
// At a boundary: the first letters of every color's lexicon plus the
// separator. Mid-word: only same-color letters continuing the trie path, plus
// the separator if the path spells a word. With `allow_off_lexicon`, mid-word
// hypotheses may also take any same-color letter off the trie and end there.
inline void get_next_chars(const ColoredAlphabet& alphabet,
                           std::span<const LexiconTrie> tries,
                           const WordCursor& cursor, bool allow_off_lexicon,
                           std::vector<ColoredChar>& out) {
  out.clear();
  const std::uint32_t sep = alphabet.separator();
  if (cursor.at_boundary()) {
    for (const auto& trie : tries) {
      for (const auto& [ch, node] : trie.node(LexiconTrie::kRoot).children) {
        out.push_back({ch, trie.color()});
      }
    }
    out.push_back({sep, cursor.color});
    return;
  }
  const LexiconTrie& trie = tries[cursor.color.value];
  if (cursor.node) {
    const auto& n = trie.node(*cursor.node);
    if (allow_off_lexicon) {
      for (std::uint32_t ch = 0; ch < alphabet.size(); ++ch) {
        if (ch != sep) out.push_back({ch, cursor.color});
      }
      out.push_back({sep, cursor.color});
      return;
    }
    for (const auto& [ch, node] : n.children) out.push_back({ch, cursor.color});
    if (n.word_final) out.push_back({sep, cursor.color});
    return;
  }
  if (allow_off_lexicon) {
    for (std::uint32_t ch = 0; ch < alphabet.size(); ++ch) {
      if (ch != sep) out.push_back({ch, cursor.color});
    }
    out.push_back({sep, cursor.color});
  }
}

inline std::vector<ColoredChar> get_next_chars(const ColoredAlphabet& alphabet,
                                               std::span<const LexiconTrie> tries,
                                               const WordCursor& cursor,
                                               bool allow_off_lexicon) {
  std::vector<ColoredChar> out;
  get_next_chars(alphabet, tries, cursor, allow_off_lexicon, out);
  return out;
}

// Cursor after emitting `ch`. A letter at a boundary must be a trie root
// child; mid-word letters off the trie clear the node.
inline WordCursor advance(std::span<const LexiconTrie> tries,
                          std::uint32_t separator, const WordCursor& cursor,
                          ColoredChar ch) {
  if (ch.index == separator) {
    return WordCursor{0, cursor.color, LexiconTrie::kRoot};
  }
  WordCursor next;
  next.length = cursor.length + 1;
  next.color = ch.color;
  const LexiconTrie& trie = tries[ch.color.value];
  const std::optional<std::uint32_t> from =
      cursor.at_boundary() ? std::optional<std::uint32_t>(LexiconTrie::kRoot)
                           : cursor.node;
  next.node = from ? trie.child(*from, ch.index) : std::nullopt;
  return next;
}

}  // namespace colordec

#endif  // COLORDEC_COLORED_LEXICON_HPP_
