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

// File formats: CTCL1 / JSON logits, line-delimited JSON manifests, and
// colored transcripts (markup text plus a JSON sidecar).

#ifndef COLORDEC_CORPUS_IO_HPP_
#define COLORDEC_CORPUS_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "colordec/common.hpp"
#include "colordec/ctc_decoder.hpp"
#include "colordec/metrics.hpp"

namespace colordec {

namespace fs = std::filesystem;

inline constexpr std::string_view kLogitsMagic = "CTCL1\n";

// --- Logits ------------------------------------------------------------------

inline void write_logits(std::ostream& os, const LogitsMatrix& m) {
  os << kLogitsMagic << m.frames() << ' ' << m.columns() << '\n';
  for (double v : m.values()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
  }
  if (!os) throw IoFailure("failed writing logits");
}

inline void write_logits_file(const fs::path& path, const LogitsMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + path.string() + "' for writing");
  write_logits(os, m);
}

inline LogitsMatrix parse_logits_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedLogits(std::string("logits JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("frames") || !j["frames"].is_array()) {
    throw MalformedLogits("logits JSON needs a \"frames\" array");
  }
  std::size_t cols = 0;
  std::vector<double> values;
  const auto& frames = j["frames"];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& row = frames[t];
    if (!row.is_array()) throw MalformedLogits("frame " + std::to_string(t) + " is not an array");
    if (t == 0) cols = row.size();
    if (row.size() != cols) throw MalformedLogits("frame " + std::to_string(t) + " has wrong width");
    for (const auto& v : row) {
      if (!v.is_number()) throw MalformedLogits("non-numeric logit in frame " + std::to_string(t));
      values.push_back(v.get<double>());
    }
  }
  return LogitsMatrix(frames.size(), cols, std::move(values));
}

inline LogitsMatrix read_logits(std::istream& is) {
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (!std::string_view(data).starts_with(kLogitsMagic)) return parse_logits_json(data);
  const auto eol = data.find('\n', kLogitsMagic.size());
  if (eol == std::string::npos) throw MalformedLogits("CTCL1 header line missing");
  std::istringstream header(data.substr(kLogitsMagic.size(), eol - kLogitsMagic.size()));
  std::size_t frames = 0, cols = 0;
  if (!(header >> frames >> cols)) throw MalformedLogits("bad CTCL1 header");
  const std::size_t count = frames * cols;
  if (data.size() - eol - 1 != count * 8) {
    throw MalformedLogits("CTCL1 payload has " + std::to_string(data.size() - eol - 1) +
                          " bytes, expected " + std::to_string(count * 8));
  }
  std::vector<double> values(count);
  const char* p = data.data() + eol + 1;
  for (std::size_t i = 0; i < count; ++i, p += 8) {
    std::uint64_t bits;
    std::memcpy(&bits, p, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    values[i] = std::bit_cast<double>(bits);
  }
  return LogitsMatrix(frames, cols, std::move(values));
}

inline LogitsMatrix read_logits_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingLogitsFile("cannot open logits '" + path.string() + "'");
  return read_logits(is);
}

// --- Manifests ---------------------------------------------------------------

struct Utterance {
  std::string id;
  // As written in the manifest; resolved against the manifest directory.
  std::string logits;
  fs::path logits_path;
  WordSeq reference;
  std::optional<std::vector<bool>> jargon_mask;

  bool operator==(const Utterance& o) const {
    return id == o.id && logits == o.logits && reference == o.reference &&
           jargon_mask == o.jargon_mask;
  }
};

inline std::string manifest_line(const Utterance& u) {
  nlohmann::ordered_json j;
  j["id"] = u.id;
  j["logits"] = u.logits;
  j["reference"] = join_words(u.reference);
  if (u.jargon_mask) {
    auto arr = nlohmann::ordered_json::array();
    for (bool b : *u.jargon_mask) arr.push_back(b ? 1 : 0);
    j["jargon_mask"] = arr;
  }
  return j.dump();
}

inline void write_manifest(const fs::path& path, const std::vector<Utterance>& utts) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + path.string() + "' for writing");
  for (const auto& u : utts) os << manifest_line(u) << '\n';
  if (!os) throw IoFailure("failed writing manifest '" + path.string() + "'");
}

inline std::vector<Utterance> read_manifest(const fs::path& path, bool check_logits = true) {
  std::ifstream in(path);
  if (!in) throw MalformedManifest("cannot open manifest '" + path.string() + "'");
  const fs::path base = path.parent_path();
  std::vector<Utterance> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedManifest(where + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("logits") || !j["logits"].is_string() || !j.contains("reference") ||
        !j["reference"].is_string()) {
      throw MalformedManifest(where + "records need string fields id, logits, reference");
    }
    Utterance u;
    u.id = j["id"].get<std::string>();
    u.logits = j["logits"].get<std::string>();
    u.reference = split_words(to_lower(j["reference"].get<std::string>()));
    if (j.contains("jargon_mask") && !j["jargon_mask"].is_null()) {
      const auto& m = j["jargon_mask"];
      if (!m.is_array()) throw MalformedManifest(where + "jargon_mask must be an array");
      std::vector<bool> mask;
      for (const auto& v : m) {
        if (v.is_boolean()) mask.push_back(v.get<bool>());
        else if (v.is_number_integer()) mask.push_back(v.get<int>() != 0);
        else throw MalformedManifest(where + "jargon_mask entries must be 0/1");
      }
      if (mask.size() != u.reference.size()) {
        throw MalformedManifest(where + "jargon_mask length differs from reference");
      }
      u.jargon_mask = std::move(mask);
    }
    if (!ids.insert(u.id).second) throw MalformedManifest(where + "duplicate id '" + u.id + "'");
    const fs::path p(u.logits);
    u.logits_path = p.is_absolute() ? p : base / p;
    if (check_logits && !fs::exists(u.logits_path)) {
      throw MissingLogitsFile(where + "logits file '" + u.logits_path.string() + "' not found");
    }
    out.push_back(std::move(u));
  }
  return out;
}

// --- Colored transcripts --------------------------------------------------------

// General words are bare; color c >= 1 is wrapped as [J:word], or [J<c>:word]
// when more than two colors are in play.
inline std::string format_colored(const std::vector<ColoredWord>& words,
                                  std::uint32_t num_colors = 2) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    const auto& w = words[i];
    if (w.color.value == 0) {
      out += w.word;
    } else if (num_colors <= 2) {
      out += "[J:" + w.word + "]";
    } else {
      out += "[J" + std::to_string(w.color.value) + ":" + w.word + "]";
    }
  }
  return out;
}

inline std::vector<ColoredWord> parse_colored(std::string_view text) {
  std::vector<ColoredWord> out;
  for (const auto& tok : split_words(text)) {
    if (tok.size() >= 4 && tok.front() == '[' && tok.back() == ']' && tok[1] == 'J') {
      const auto colon = tok.find(':');
      if (colon != std::string::npos) {
        std::uint32_t color = 1;
        const std::string digits = tok.substr(2, colon - 2);
        bool ok = true;
        if (!digits.empty()) {
          ok = digits.find_first_not_of("0123456789") == std::string::npos;
          if (ok) color = static_cast<std::uint32_t>(std::stoul(digits));
        }
        if (ok) {
          out.push_back({tok.substr(colon + 1, tok.size() - colon - 2), ColorId(color)});
          continue;
        }
      }
    }
    out.push_back({tok, ColorId(0)});
  }
  return out;
}

inline nlohmann::ordered_json transcript_json(const ColoredTranscript& t) {
  nlohmann::ordered_json j;
  auto words = nlohmann::ordered_json::array();
  for (const auto& w : t.words) {
    nlohmann::ordered_json e;
    e["word"] = w.word;
    e["color"] = w.color.value;
    words.push_back(e);
  }
  j["words"] = words;
  if (std::isfinite(t.score)) {
    j["score"] = t.score;
  } else {
    j["score"] = nullptr;
  }
  return j;
}

// Writes `<path>` (markup) and `<path>.json` (explicit pairs and score).
inline void write_colored_transcript(const ColoredTranscript& t, const fs::path& path,
                                     std::uint32_t num_colors = 2) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoFailure("cannot open '" + path.string() + "' for writing");
    os << format_colored(t.words, num_colors) << '\n';
    if (!os) throw IoFailure("failed writing '" + path.string() + "'");
  }
  fs::path side = path;
  side += ".json";
  std::ofstream os(side, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + side.string() + "' for writing");
  os << transcript_json(t).dump(2) << '\n';
  if (!os) throw IoFailure("failed writing '" + side.string() + "'");
}

inline ColoredTranscript read_colored_transcript_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure(path.string() + ": " + e.what());
  }
  ColoredTranscript t;
  for (const auto& e : j.at("words")) {
    t.words.push_back({e.at("word").get<std::string>(), ColorId(e.at("color").get<std::uint32_t>())});
  }
  t.score = j.at("score").is_null() ? kLogZero : j.at("score").get<double>();
  return t;
}

}  // namespace colordec

#endif  // COLORDEC_CORPUS_IO_HPP_
