// Copyright 2026 The decipher Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: synth, train, decipher, eval, selftest.
//
// Exit status: 0 on success, 2 for usage errors (bad flags, missing files,
// invalid configuration), 1 for failures during a run.

#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "decipher/checkpoint.hpp"
#include "decipher/corpus.hpp"
#include "decipher/cost.hpp"
#include "decipher/eval.hpp"
#include "decipher/flow.hpp"
#include "decipher/report.hpp"
#include "decipher/selftest.hpp"
#include "decipher/trainer.hpp"

namespace decipher {

namespace fs = std::filesystem;

namespace detail {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void write_symbols(const fs::path& path, const SymbolInventory& inv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  for (const auto& s : inv.symbols()) out << s << '\n';
}

/// Re-expresses a lexicon's words in the symbol ids of a saved inventory.
inline Lexicon remap_lexicon(const Lexicon& lex, const fs::path& symbols_path) {
  Lexicon out;
  out.inventory = SymbolInventory(lex.inventory.format());
  out.vocabulary.language = lex.vocabulary.language;
  const std::string text = read_file(symbols_path);
  for (auto line : split_lines(text))
    if (!line.empty()) out.inventory.add(std::string(line));
  for (const auto& w : lex.vocabulary.words) {
    Word mapped;
    for (int s : w) {
      auto id = out.inventory.find(lex.inventory.symbol(s));
      if (!id) throw InputError("symbol '" + lex.inventory.symbol(s) + "' was not seen in training");
      mapped.push_back(*id);
    }
    out.vocabulary.words.push_back(std::move(mapped));
  }
  return out;
}

inline LoadResult load_words(const std::string& path, WordFormat format, Language lang, std::ostream& err) {
  auto r = load_vocabulary(path, format, lang);
  if (r.skipped_empty_lines) err << "warning: " << path << ": skipped " << r.skipped_empty_lines << " empty lines\n";
  return r;
}

/// Pair list from a TSV (first two columns), as raw strings.
inline std::vector<std::pair<std::string, std::string>> read_string_pairs(const fs::path& path, WordFormat format) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  const std::string text = read_file(path);
  for (auto line : split_lines(text)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto t1 = line.find('\t');
    if (t1 == std::string_view::npos)
      throw InputError(path.string() + ": line " + std::to_string(line_no) + ": expected tab-separated columns");
    const auto t2 = line.find('\t', t1 + 1);
    out.emplace_back(normalize_word(line.substr(0, t1), format),
                     normalize_word(line.substr(t1 + 1, t2 == std::string_view::npos ? t2 : t2 - t1 - 1), format));
  }
  return out;
}

}  // namespace detail

/// "desk" (the default) or "full", the large model sizes.
inline TrainConfig make_preset(const std::string& name) {
  TrainConfig c;
  if (name == "full") return c;
  if (name == "desk") return desk_preset();
  throw ConfigError("unknown preset '" + name + "' (expected desk or full)");
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cognate decipherment with a neural model and minimum-cost flow"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  std::string format_name = "plain";
  int threads = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic lost/known corpus");
  SynthSpec spec;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--words", spec.vocabulary_size, "Cognate pairs before removal")->capture_default_str();
  synth->add_option("--symbols", spec.symbols, "Known alphabet size")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--insertion", spec.insertion_rate, "Per-position insertion rate")->capture_default_str();
  synth->add_option("--deletion", spec.deletion_rate, "Per-position deletion rate")->capture_default_str();
  synth->add_option("--unpaired-lost", spec.unpaired_lost, "Fraction of pairs losing their known word")
      ->capture_default_str();
  synth->add_option("--unpaired-known", spec.unpaired_known, "Fraction of pairs losing their lost word")
      ->capture_default_str();
  synth->add_option("--substitution-seed", spec.substitution_seed, "Extra seed for the symbol map");
  synth->add_option("--zipf", spec.zipf_exponent, "Symbol frequency skew")->capture_default_str();
  synth->add_flag("--syllabic", spec.syllabic, "Each lost symbol stands for two known symbols");

  // train
  auto* train_cmd = app.add_subcommand("train", "Run iterative training and write the assignment");
  std::string lost_path, known_path, gold_path, config_path, train_out, preset = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations, restarts, restart_screen, epochs;
  std::optional<std::int64_t> cognates;
  bool syllabic = false, noiseless = false, no_flow = false;
  train_cmd->add_option("--lost", lost_path, "Lost-language word list")->required();
  train_cmd->add_option("--known", known_path, "Known-language word list")->required();
  train_cmd->add_option("--gold", gold_path, "Gold pairs for per-iteration accuracy");
  train_cmd->add_option("--config", config_path, "key = value config file");
  train_cmd->add_option("--preset", preset, "desk or full")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Random seed")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--iterations", iterations, "Outer iterations T");
  train_cmd->add_option("--cognates", cognates, "Target number of cognate pairs N");
  train_cmd->add_option("--restarts", restarts, "Random restarts");
  train_cmd->add_option("--restart-screen", restart_screen, "Iterations before only the best restart continues");
  train_cmd->add_option("--epochs", epochs, "Epochs per iteration");
  train_cmd->add_flag("--noiseless", noiseless, "Constant demand N every iteration");
  train_cmd->add_flag("--no-flow", no_flow, "Single pass on the uniform flow, no solver");
  train_cmd->add_flag("--syllabic", syllabic, "Syllabic lost script: second-order regularizer, 100 universal symbols");
  train_cmd->add_option("--format", format_name, "Word format: plain or spaced")->capture_default_str();
  train_cmd->add_option("--threads", threads, "Worker threads (0: DECIPHER_THREADS or all cores)");

  // decipher
  auto* dec = app.add_subcommand("decipher", "Assign known partners with a trained checkpoint");
  std::string ckpt_path, dec_out;
  std::optional<std::int64_t> demand;
  std::size_t dec_top_k = 5;
  std::int64_t dec_capacity = 1;
  std::uint64_t dec_seed = 0;
  dec->add_option("--checkpoint", ckpt_path, "Checkpoint written by train")->required();
  dec->add_option("--lost", lost_path, "Lost-language word list")->required();
  dec->add_option("--known", known_path, "Known-language word list")->required();
  dec->add_option("--seed", dec_seed, "Sampling seed")->required();
  dec->add_option("--out", dec_out, "Output directory")->required();
  dec->add_option("--demand", demand, "Pairs to assign (default: min of the vocabulary sizes)");
  dec->add_option("--top-k", dec_top_k, "Candidates per lost word")->capture_default_str();
  dec->add_option("--capacity", dec_capacity, "Lost words per known word")->capture_default_str();
  dec->add_option("--format", format_name, "Word format: plain or spaced")->capture_default_str();
  dec->add_option("--threads", threads, "Worker threads");

  // eval
  auto* ev = app.add_subcommand("eval", "Score an assignment against gold pairs");
  std::string pairs_path, eval_out;
  ev->add_option("--pairs", pairs_path, "Assignment TSV")->required();
  ev->add_option("--gold", gold_path, "Gold TSV")->required();
  ev->add_option("--lost", lost_path, "Lost word list (restricts to its words)");
  ev->add_option("--known", known_path, "Known word list");
  ev->add_option("--out", eval_out, "Directory for eval.json, eval.txt and scored.tsv");
  ev->add_option("--format", format_name, "Word format: plain or spaced")->capture_default_str();

  // selftest
  auto* self = app.add_subcommand("selftest", "Run the flow and gradient oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  enum class Stage { setup, run } stage = Stage::setup;
  try {
    const auto format = parse_word_format(format_name);

    if (*synth) {
      const auto corpus = synthesize(spec, synth_seed);
      stage = Stage::run;
      const auto paths = write_synth_corpus(synth_out, corpus, spec, synth_seed);
      out << "wrote " << corpus.lost.size() << " lost words, " << corpus.known.size() << " known words, "
          << corpus.gold.size() << " gold pairs to " << fs::path(synth_out).string() << '\n';
      (void)paths;
      return 0;
    }

    if (*train_cmd) {
      TrainConfig cfg = make_preset(preset);
      if (!config_path.empty()) apply_config_file(cfg, config_path);
      cfg.seed = *seed;
      if (iterations) cfg.iterations = *iterations;
      if (restarts) cfg.restarts = *restarts;
      if (restart_screen) cfg.restart_screen = *restart_screen;
      if (epochs) cfg.epochs = *epochs;
      if (cognates) cfg.cognates = *cognates;
      if (noiseless) cfg.noiseless = true;
      if (no_flow) cfg.use_flow = false;
      if (syllabic) {
        cfg.model.regularizer = Regularizer::omega2;
        cfg.model.universal_size = 100;
      }
      if (threads > 0 || cfg.threads <= 1) cfg.threads = resolve_threads(threads);

      const auto lost = detail::load_words(lost_path, format, Language::lost, err).lexicon;
      const auto known = detail::load_words(known_path, format, Language::known, err).lexicon;
      std::optional<GoldTable> gold;
      if (!gold_path.empty()) gold = load_gold(gold_path, lost, known);
      const TrainConfig resolved = resolve_config(cfg, lost, known);

      stage = Stage::run;
      TrainHooks<double> hooks;
      hooks.log = [&](const std::string& msg) { err << msg << '\n'; };
      auto result = multi_restart<double>(lost, known, resolved, gold ? &*gold : nullptr, hooks);

      fs::create_directories(train_out);
      const fs::path dir(train_out);
      write_assignment(dir / "pairs.tsv", result.pairs, lost, known);
      write_cost_matrix(dir / "costs.tsv", result.costs, lost, known);
      save_checkpoint(dir / "model.ckpt", result.params, resolved.model);
      detail::write_symbols(dir / "lost.symbols", lost.inventory);
      detail::write_symbols(dir / "known.symbols", known.inventory);
      std::optional<EvalReport> report;
      if (gold) report = score(result.pairs, *gold);
      write_report(dir / "run.json", &result.record, report ? &*report : nullptr, &resolved);
      out << summary_text(&result.record, report ? &*report : nullptr);
      return 0;
    }

    if (*dec) {
      auto [params, model_cfg] = load_checkpoint<double>(ckpt_path);
      auto lost = detail::load_words(lost_path, format, Language::lost, err).lexicon;
      auto known = detail::load_words(known_path, format, Language::known, err).lexicon;
      const auto ckpt_dir = fs::path(ckpt_path).parent_path();
      if (fs::exists(ckpt_dir / "lost.symbols")) lost = detail::remap_lexicon(lost, ckpt_dir / "lost.symbols");
      if (fs::exists(ckpt_dir / "known.symbols")) known = detail::remap_lexicon(known, ckpt_dir / "known.symbols");
      if (lost.inventory.symbol_count() != model_cfg.lost_symbols ||
          known.inventory.symbol_count() != model_cfg.known_symbols)
        throw ConfigError("word lists do not match the checkpoint's symbol inventories");
      const auto D = demand.value_or(static_cast<std::int64_t>(std::min(lost.size(), known.size())));
      if (D < 0) throw ConfigError("demand must be nonnegative");
      CostOptions opt;
      opt.top_k = dec_top_k;
      opt.samples = model_cfg.samples;
      opt.threads = resolve_threads(threads);

      stage = Stage::run;
      const auto costs = build_cost_matrix(params, model_cfg, lost.vocabulary.words, known.vocabulary.words, opt,
                                           dec_seed);
      auto net = make_network(costs, D, dec_capacity);
      FlowAssignment assignment;
      try {
        assignment = solve_mcf(net);
      } catch (const SolverError& e) {
        err << "warning: demand " << D << " infeasible, lowered to " << e.max_feasible_flow() << '\n';
        net.demand = e.max_feasible_flow();
        assignment = solve_mcf(net);
      }
      std::vector<PredictedPair> pairs;
      for (const auto& [i, j] : assignment.pairs) pairs.push_back({i, j, 1.0});
      fs::create_directories(dec_out);
      write_assignment(fs::path(dec_out) / "pairs.tsv", pairs, lost, known);
      write_cost_matrix(fs::path(dec_out) / "costs.tsv", costs, lost, known);
      out << "assigned " << pairs.size() << " pairs, total cost "
          << static_cast<double>(assignment.total_cost) / kCostScale << '\n';
      return 0;
    }

    if (*ev) {
      Lexicon lost, known;
      const auto emitted_raw = detail::read_string_pairs(pairs_path, format);
      const auto gold_raw = detail::read_string_pairs(gold_path, format);
      if (!lost_path.empty() && !known_path.empty()) {
        lost = detail::load_words(lost_path, format, Language::lost, err).lexicon;
        known = detail::load_words(known_path, format, Language::known, err).lexicon;
      } else {
        // Vocabularies made of the words the two files mention.
        std::string lost_text, known_text;
        for (const auto* list : {&gold_raw, &emitted_raw})
          for (const auto& [a, b] : *list) {
            lost_text += a + '\n';
            known_text += b + '\n';
          }
        if (lost_text.empty()) throw InputError("gold and assignment files are both empty");
        lost = parse_vocabulary(lost_text, format, Language::lost).lexicon;
        known = parse_vocabulary(known_text, format, Language::known).lexicon;
      }
      const auto gold = load_gold(gold_path, lost, known);
      const auto emitted = load_assignment(pairs_path, lost, known);
      const auto report = score(emitted, gold);
      out << summary_text(nullptr, &report);
      if (!eval_out.empty()) {
        fs::create_directories(eval_out);
        write_report(fs::path(eval_out) / "eval.json", nullptr, &report, nullptr);
        write_scored_pairs(fs::path(eval_out) / "scored.tsv", report, lost, known);
      }
      return 0;
    }

    if (*self) {
      stage = Stage::run;
      const auto flow = flow_suite();
      out << (flow.passed ? "PASS" : "FAIL") << " flow oracle: " << flow.detail << '\n';
      const auto grad = gradient_suite();
      out << (grad.passed ? "PASS" : "FAIL") << " gradient oracle: " << grad.detail << '\n';
      return flow.passed && grad.passed ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return stage == Stage::setup ? 2 : 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return stage == Stage::setup ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace decipher
