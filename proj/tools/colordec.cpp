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

// colordec: decode, evaluate, grid-search, merge colored LMs, synthesize
// corpora and verify the beam search against the exhaustive oracle.
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "colordec/colordec.hpp"

namespace {

using namespace colordec;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by every command that builds a decoder.
struct ModelFlags {
  std::vector<std::string> lexicons;
  std::vector<std::string> lms;
  std::string alphabet{kDefaultAlphabet};
  double alpha = 1.0;
  double beta = 0.0;
  double lambda = 0.5;
  int bins = 53;
  std::vector<double> unk_word{-10.0};
  std::string unk_subword = "none";
  std::vector<double> color_prior;
  std::size_t beam_width = 64;
  std::string calibrate;

  void add_to(CLI::App* app) {
    app->add_option("--lexicon", lexicons,
                    "Lexicon file, one word per line; repeat in color order (general first). "
                    "Defaults to each LM's vocabulary");
    app->add_option("--lm", lms, "ARPA language model, aligned with --lexicon");
    app->add_option("--alphabet", alphabet,
                    "Base characters in logits column order, including the space separator; "
                    "blank is the extra last column");
    app->add_option("--alpha", alpha, "LM weight");
    app->add_option("--beta", beta, "Per-word insertion bonus (log10)");
    app->add_option("--lambda", lambda, "Jargon weight for linear / log-linear fusion");
    app->add_option("--bins", bins, "Bins per axis for bin estimation")->check(CLI::PositiveNumber);
    app->add_option("--unk-word-penalty", unk_word,
                    "log10 probability for out-of-vocabulary words, one value per LM or a "
                    "single shared value")
        ->delimiter(',');
    app->add_option("--unk-subword-penalty", unk_subword,
                    "log10 cost per off-lexicon character, or 'none' to keep words in the "
                    "lexicons");
    app->add_option("--color-prior", color_prior, "P(color) per color; uniform when unset")
        ->delimiter(',');
    app->add_option("--beam-width", beam_width, "Beam width")->check(CLI::PositiveNumber);
    app->add_option("--calibrate", calibrate,
                    "Manifest whose references calibrate the bin-estimation table");
  }

  std::optional<double> subword() const { return parse_subword(unk_subword, "--unk-subword-penalty"); }

  static std::optional<double> parse_subword(const std::string& v, const std::string& flag) {
    if (v == "none" || v.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw UsageError(flag + ": expected a number or 'none', got '" + v + "'");
  }

  ScorerConfig scorer() const {
    ScorerConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.lambda = lambda;
    c.unknown_word_penalty = unk_word;
    c.unknown_subword_penalty = subword();
    c.color_prior = color_prior;
    return c;
  }

  MethodConfig method(FusionKind kind) const {
    MethodConfig m;
    m.kind = kind;
    m.scorer = scorer();
    m.num_bins = bins;
    m.decoder.beam_width = beam_width;
    return m;
  }

  // Checks flag combinations that do not need any file access.
  void check_usage(const std::vector<FusionKind>& kinds) const {
    if (lms.empty()) throw UsageError("--lm is required");
    if (!lexicons.empty() && lexicons.size() != lms.size()) {
      throw UsageError("--lexicon and --lm must be given the same number of times");
    }
    for (FusionKind k : kinds) {
      const bool two = k != FusionKind::kGeneral && k != FusionKind::kColoring;
      if (two && lms.size() < 2) {
        throw UsageError("--fusion " + std::string(to_string(k)) +
                         " needs two --lm files (general, then jargon)");
      }
    }
  }

  LanguageResources load() const {
    LanguageResources res;
    res.alphabet_chars = utf8_chars(alphabet);
    for (const auto& path : lms) {
      res.lms.push_back(std::make_shared<NGramModel>(read_arpa_file(path)));
    }
    if (!lexicons.empty()) {
      for (const auto& path : lexicons) res.lexicons.push_back(read_lexicon_file(path));
    } else {
      for (const auto& lm : res.lms) {
        std::vector<std::string> words;
        for (WordId id = 0; id < lm->vocabulary_size(); ++id) {
          const auto& w = lm->word(id);
          if (w == "<s>" || w == "</s>" || w == "<unk>") continue;
          words.push_back(w);
        }
        res.lexicons.push_back(std::move(words));
      }
    }
    for (std::size_t i = 0; i < res.lexicons.size(); ++i) {
      if (res.lexicons[i].empty()) {
        throw EmptyLexicon("lexicon " + std::to_string(i) + " has no words");
      }
    }
    return res;
  }
};

std::vector<FusionKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<FusionKind> out;
  for (const auto& n : names) {
    auto k = parse_fusion_kind(n);
    if (!k) {
      throw UsageError("--fusion: unknown kind '" + n +
                       "' (general, jargon, linear, loglinear, bins, bayes, coloring)");
    }
    out.push_back(*k);
  }
  return out;
}

std::optional<BinTable> bins_for(FusionKind kind, const ModelFlags& flags,
                                 const LanguageResources& res, const MethodConfig& m) {
  if (kind != FusionKind::kBins) return std::nullopt;
  if (flags.calibrate.empty()) throw UsageError("--fusion bins needs --calibrate <manifest>");
  std::vector<WordSeq> refs;
  for (const auto& u : read_manifest(flags.calibrate, false)) refs.push_back(u.reference);
  return fit_bins_for(res, m.scorer, refs, m.num_bins);
}

// --- decode ------------------------------------------------------------------

struct DecodeFlags {
  ModelFlags model;
  std::string logits;
  std::string fusion = "coloring";
  std::string out;
};

int run_decode(const DecodeFlags& f) {
  const auto kinds = parse_kinds({f.fusion});
  f.model.check_usage(kinds);
  f.model.subword();
  const auto res = f.model.load();
  const auto m = f.model.method(kinds[0]);
  const PreparedMethod method(res, m, bins_for(kinds[0], f.model, res, m));
  const auto transcript = method.decode(read_logits_file(f.logits));
  const auto colors = method.alphabet().num_colors();
  std::cout << format_colored(transcript.words, colors) << '\n';
  std::cout << "score: "
            << (std::isfinite(transcript.score) ? format_double(transcript.score) : "-inf")
            << '\n';
  if (!f.out.empty()) write_colored_transcript(transcript, f.out, colors);
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalFlags {
  ModelFlags model;
  std::string manifest;
  std::vector<std::string> fusion{"coloring"};
  unsigned jobs = 1;
  std::string report = "text";
  std::string out;
};

int run_eval(const EvalFlags& f) {
  const auto kinds = parse_kinds(f.fusion);
  f.model.check_usage(kinds);
  f.model.subword();
  const auto res = f.model.load();
  const auto corpus = load_corpus(f.manifest);
  EvalReport report;
  std::ofstream hyp_out;
  if (!f.out.empty()) {
    hyp_out.open(f.out, std::ios::binary);
    if (!hyp_out) throw IoFailure("cannot open '" + f.out + "' for writing");
  }
  for (FusionKind kind : kinds) {
    const auto m = f.model.method(kind);
    const PreparedMethod method(res, m, bins_for(kind, f.model, res, m));
    const auto hyps = decode_corpus(method, corpus.logits, f.jobs);
    report.rows.push_back(score_transcripts(std::string(to_string(kind)), corpus.utterances, hyps));
    if (hyp_out.is_open()) {
      for (std::size_t i = 0; i < hyps.size(); ++i) {
        nlohmann::ordered_json j;
        j["id"] = corpus.utterances[i].id;
        j["method"] = std::string(to_string(kind));
        j["text"] = format_colored(hyps[i].words, method.alphabet().num_colors());
        const auto t = transcript_json(hyps[i]);
        j["words"] = t["words"];
        j["score"] = t["score"];
        hyp_out << j.dump() << '\n';
      }
    }
  }
  if (f.report == "json") {
    std::cout << report_json(report).dump(2) << '\n';
  } else {
    std::cout << format_report(report);
  }
  return 0;
}

// --- gridsearch --------------------------------------------------------------

struct GridFlags {
  ModelFlags model;
  std::string manifest_val;
  std::string fusion = "coloring";
  unsigned jobs = 1;
  GridSpec grid;
  std::vector<std::string> unk_subword{"-7", "-5", "-3", "-1", "0"};
  std::string out = "gridsearch.json";
};

int run_gridsearch(GridFlags f) {
  const auto kinds = parse_kinds({f.fusion});
  f.model.check_usage(kinds);
  f.grid.unknown_subword.clear();
  for (const auto& v : f.unk_subword) {
    f.grid.unknown_subword.push_back(ModelFlags::parse_subword(v, "--grid-unk-subword"));
  }
  try {
    f.grid.validate();
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }
  const auto res = f.model.load();
  const auto corpus = load_corpus(f.manifest_val);
  std::vector<WordSeq> calib;
  if (!f.model.calibrate.empty()) {
    for (const auto& u : read_manifest(f.model.calibrate, false)) calib.push_back(u.reference);
  }
  const auto base = f.model.method(kinds[0]);
  const auto size = f.grid.expand(kinds[0], base, res.lms.size()).size();
  std::cout << "evaluating " << size << " configuration(s) of " << to_string(kinds[0]) << " on "
            << corpus.utterances.size() << " utterance(s)\n";
  const auto outcome = grid_search(kinds[0], f.grid, res, base, corpus, f.jobs, calib);

  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : outcome.rows) {
    nlohmann::ordered_json j;
    j["config"] = config_json(r.config);
    j["result"] = row_json(r.result);
    rows.push_back(j);
  }
  nlohmann::ordered_json doc;
  doc["best"] = outcome.best;
  doc["rows"] = rows;
  std::ofstream os(f.out, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + f.out + "' for writing");
  os << doc.dump(2) << '\n';

  const auto& best = outcome.best_row();
  std::cout << "best: " << config_json(best.config).dump() << '\n';
  std::cout << "      " << row_json(best.result).dump() << '\n';
  return 0;
}

// --- merge-lm ------------------------------------------------------------------

struct MergeFlags {
  std::vector<std::string> lms;
  std::string out;
};

int run_merge(const MergeFlags& f) {
  std::vector<NGramModel> models;
  for (const auto& p : f.lms) models.push_back(read_arpa_file(p));
  std::vector<ColoredModelRef> refs;
  for (std::size_t c = 0; c < models.size(); ++c) {
    refs.push_back({&models[c], ColorId(static_cast<std::uint32_t>(c))});
  }
  write_arpa_file(merge_colored(refs), f.out);
  return 0;
}

// --- synth ---------------------------------------------------------------------

struct SynthFlags {
  bool demo = false;
  std::string sentences;
  std::vector<std::string> lexicons;
  std::string alphabet{kDefaultAlphabet};
  double rate = 0.3;
  double noise = 0.25;
  int frames_per_char = 1;
  std::uint64_t seed = 7;
  std::size_t num_utterances = 200;
  std::string id_prefix = "utt";
  std::string out;
};

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("cannot open '" + path.string() + "' for writing");
  for (const auto& l : lines) os << l << '\n';
}

int run_synth(const SynthFlags& f) {
  if (f.demo == !f.sentences.empty()) {
    throw UsageError("give exactly one of --demo or --sentences");
  }
  if (!f.demo && f.lexicons.size() < 2) {
    throw UsageError("--sentences needs --lexicon twice (general, then jargon)");
  }
  SynthesisSpec spec;
  spec.jargon_insertion_rate = f.rate;
  spec.noise_level = f.noise;
  spec.frames_per_char = f.frames_per_char;
  spec.rng_seed = f.seed;
  spec.num_utterances = f.num_utterances;
  spec.id_prefix = f.id_prefix;
  try {
    spec.validate();
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }
  const auto alphabet = ColoredAlphabet(utf8_chars(f.alphabet), 1);
  const fs::path dir(f.out);
  std::vector<std::vector<std::string>> lexicons;
  if (f.demo) {
    const auto world = make_demo_world(f.seed);
    spec.general_sentences = world.test_sentences;
    lexicons = {world.general_lexicon, world.jargon_terms};
    fs::create_directories(dir);
    write_lines(dir / "general.lex", world.general_lexicon);
    write_lines(dir / "jargon.lex", world.jargon_lexicon);
    write_arpa_file(estimate_bigram_lm(world.general_text), (dir / "general.arpa").string());
    write_arpa_file(estimate_bigram_lm(world.domain_text), (dir / "jargon.arpa").string());
  } else {
    std::ifstream in(f.sentences);
    if (!in) throw IoFailure("cannot open sentences '" + f.sentences + "'");
    std::string line;
    while (std::getline(in, line)) {
      auto words = split_words(to_lower(line));
      if (!words.empty()) spec.general_sentences.push_back(std::move(words));
    }
    for (const auto& p : f.lexicons) lexicons.push_back(read_lexicon_file(p));
  }
  const auto utts = synthesize_corpus(spec, lexicons, alphabet);
  write_synth_corpus(dir, utts);
  std::cout << "wrote " << utts.size() << " utterance(s) to " << (dir / "manifest.jsonl").string()
            << '\n';
  return 0;
}

// --- verify --------------------------------------------------------------------

struct VerifyFlags {
  std::size_t instances = 100;
  std::uint64_t seed = 1;
  oracle::RandomInstanceSpec spec;
};

int run_verify(const VerifyFlags& f) {
  std::size_t mismatches = 0;
  double max_divergence = 0.0;
  for (std::size_t i = 0; i < f.instances; ++i) {
    const auto inst = oracle::random_instance(f.seed * 1000003 + i, f.spec);
    ScorerConfig cfg;
    cfg.unknown_subword_penalty = inst.subword_penalty;
    const auto scorer = make_scorer(FusionKind::kColoring, FusionModels{inst.lms, {}}, cfg);
    DecoderConfig dc;
    dc.beam_width = oracle::kMaxCandidates;
    const auto beam = decode(inst.logits, inst.alphabet, inst.tries, scorer, dc);
    const auto exact = oracle::exhaustive_decode(inst.logits, inst.alphabet, inst.tries, scorer,
                                                 inst.logits.frames());
    const bool both_empty = beam.score == kLogZero && exact.best.score == kLogZero;
    const double gap = both_empty ? 0.0 : std::abs(beam.score - exact.best.score);
    if (!both_empty) max_divergence = std::max(max_divergence, gap);
    if (beam.labeling != exact.best.labeling || beam.words != exact.best.words || !(gap <= 1e-9)) {
      ++mismatches;
      std::cout << "instance " << i << ": beam '" << format_colored(beam.words) << "' ("
                << beam.score << ") vs oracle '" << format_colored(exact.best.words) << "' ("
                << exact.best.score << ")\n";
    }
  }
  std::cout << "instances: " << f.instances << "\nmismatches: " << mismatches
            << "\nmax score divergence: " << max_divergence << '\n';
  return mismatches == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Colored CTC decoding with general and jargon language models"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  DecodeFlags decode_flags;
  auto* decode_cmd = app.add_subcommand("decode", "Decode one logits file");
  decode_cmd->add_option("--logits", decode_flags.logits, "Logits file (CTCL1 or JSON)")->required();
  decode_cmd->add_option("--fusion", decode_flags.fusion,
                         "general, jargon, linear, loglinear, bins, bayes or coloring");
  decode_cmd->add_option("--out", decode_flags.out,
                         "Write the colored transcript here (plus a .json sidecar)");
  decode_flags.model.add_to(decode_cmd);

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate fusion methods on a manifest");
  eval_cmd->add_option("--manifest", eval_flags.manifest, "Line-delimited JSON manifest")->required();
  eval_cmd->add_option("--fusion", eval_flags.fusion, "Fusion kind; repeat to compare methods");
  eval_cmd->add_option("--jobs", eval_flags.jobs, "Concurrent decodes")
      ->envname("COLOR_DECODE_JOBS")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--report", eval_flags.report, "Report format")
      ->check(CLI::IsMember({"text", "json"}));
  eval_cmd->add_option("--out", eval_flags.out, "Write per-utterance hypotheses (JSON lines)");
  eval_flags.model.add_to(eval_cmd);

  GridFlags grid_flags;
  auto* grid_cmd = app.add_subcommand("gridsearch", "Grid-search hyperparameters on a validation manifest");
  grid_cmd->add_option("--manifest-val", grid_flags.manifest_val, "Validation manifest")->required();
  grid_cmd->add_option("--fusion", grid_flags.fusion, "Fusion kind to tune");
  grid_cmd->add_option("--jobs", grid_flags.jobs, "Concurrent decodes")
      ->envname("COLOR_DECODE_JOBS")
      ->check(CLI::PositiveNumber);
  grid_cmd->add_option("--grid-alpha", grid_flags.grid.alpha, "Alpha values")->delimiter(',');
  grid_cmd->add_option("--grid-beta", grid_flags.grid.beta, "Beta values")->delimiter(',');
  grid_cmd->add_option("--grid-lambda", grid_flags.grid.lambda, "Lambda values (linear, loglinear)")
      ->delimiter(',');
  grid_cmd->add_option("--grid-unk-word", grid_flags.grid.unknown_word,
                       "Unknown-word penalties, crossed for each LM")
      ->delimiter(',');
  grid_cmd->add_option("--grid-unk-subword", grid_flags.unk_subword,
                       "Unknown-subword penalties; 'none' disables off-lexicon extensions")
      ->delimiter(',');
  grid_cmd->add_option("--grid-bins", grid_flags.grid.bins, "Bin counts (bins)")->delimiter(',');
  grid_cmd->add_option("--out", grid_flags.out, "JSON file receiving every grid row");
  grid_flags.model.add_to(grid_cmd);

  MergeFlags merge_flags;
  auto* merge_cmd = app.add_subcommand("merge-lm", "Merge LMs into one colored ARPA model");
  merge_cmd->add_option("--lm", merge_flags.lms, "ARPA model; repeat in color order")->required();
  merge_cmd->add_option("--out", merge_flags.out, "Output ARPA file")->required();

  SynthFlags synth_flags;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a mixed-speech corpus");
  synth_cmd->add_flag("--demo", synth_flags.demo,
                      "Use the built-in demo world and also write its lexicons and LMs");
  synth_cmd->add_option("--sentences", synth_flags.sentences, "General sentences, one per line");
  synth_cmd->add_option("--lexicon", synth_flags.lexicons,
                        "General lexicon, then jargon lexicon(s) supplying inserted words");
  synth_cmd->add_option("--alphabet", synth_flags.alphabet, "Base characters in column order");
  synth_cmd->add_option("--rate", synth_flags.rate, "Jargon insertion rate");
  synth_cmd->add_option("--noise", synth_flags.noise, "Noise level");
  synth_cmd->add_option("--frames-per-char", synth_flags.frames_per_char, "Frames per character");
  synth_cmd->add_option("--seed", synth_flags.seed, "RNG seed");
  synth_cmd->add_option("--num-utterances", synth_flags.num_utterances, "Utterances to write");
  synth_cmd->add_option("--id-prefix", synth_flags.id_prefix, "Utterance id prefix");
  synth_cmd->add_option("--out", synth_flags.out, "Output directory")->required();

  VerifyFlags verify_flags;
  auto* verify_cmd = app.add_subcommand("verify", "Compare beam search with the exhaustive oracle");
  verify_cmd->add_option("--instances", verify_flags.instances, "Random instances");
  verify_cmd->add_option("--seed", verify_flags.seed, "RNG seed");
  verify_cmd->add_option("--colors", verify_flags.spec.num_colors, "Colors")->check(CLI::Range(1, 4));
  verify_cmd->add_option("--max-frames", verify_flags.spec.max_frames, "Maximum frames")
      ->check(CLI::Range(1, 6));
  verify_cmd->add_option("--max-chars", verify_flags.spec.max_chars, "Maximum alphabet size")
      ->check(CLI::Range(2, 4));
  verify_cmd->add_option("--max-words", verify_flags.spec.max_words, "Maximum words per lexicon")
      ->check(CLI::Range(1, 6));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*decode_cmd) return run_decode(decode_flags);
    if (*eval_cmd) return run_eval(eval_flags);
    if (*grid_cmd) return run_gridsearch(grid_flags);
    if (*merge_cmd) return run_merge(merge_flags);
    if (*synth_cmd) return run_synth(synth_flags);
    if (*verify_cmd) return run_verify(verify_flags);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidConfig& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
