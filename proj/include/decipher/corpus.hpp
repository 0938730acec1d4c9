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

// Word lists, symbol inventories, gold cognate tables and the synthetic
// lost/known corpus generator.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "decipher/error.hpp"
#include "decipher/random.hpp"

namespace decipher {

enum class Language { lost, known };

/// How a line of a word list is split into symbols.
enum class WordFormat {
  plain,   // every Unicode codepoint is one symbol
  spaced,  // whitespace-delimited tokens (syllabaries)
};

inline std::string_view to_string(Language l) {
  return l == Language::lost ? "lost" : "known";
}
inline std::string_view to_string(WordFormat f) {
  return f == WordFormat::plain ? "plain" : "spaced";
}
inline WordFormat parse_word_format(std::string_view s) {
  if (s == "plain") return WordFormat::plain;
  if (s == "spaced" || s == "space-separated") return WordFormat::spaced;
  throw ConfigError("unknown word format '" + std::string(s) + "'");
}

using Word = std::vector<int>;

/// Ordered symbol set. Corpus symbols take ids 0..n-1 in first-occurrence
/// order; EOS, BOS and PAD follow at n, n+1, n+2.
class SymbolInventory {
 public:
  SymbolInventory() = default;
  explicit SymbolInventory(WordFormat format) : format_(format) {}

  int add(const std::string& symbol) {
    auto it = index_.find(symbol);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(symbols_.size());
    symbols_.push_back(symbol);
    index_.emplace(symbol, id);
    return id;
  }

  std::optional<int> find(const std::string& symbol) const {
    auto it = index_.find(symbol);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  int symbol_count() const { return static_cast<int>(symbols_.size()); }
  int eos() const { return symbol_count(); }
  int bos() const { return symbol_count() + 1; }
  int pad() const { return symbol_count() + 2; }
  /// Total id range including the reserved ids.
  int size() const { return symbol_count() + 3; }

  bool is_symbol(int id) const { return id >= 0 && id < symbol_count(); }
  WordFormat format() const { return format_; }

 private:
  WordFormat format_ = WordFormat::plain;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

struct Vocabulary {
  Language language = Language::lost;
  std::vector<Word> words;

  std::size_t size() const { return words.size(); }
  bool empty() const { return words.empty(); }
};

/// A vocabulary together with the inventory its ids refer to.
struct Lexicon {
  SymbolInventory inventory;
  Vocabulary vocabulary;

  std::size_t size() const { return vocabulary.size(); }
  const Word& word(std::size_t i) const { return vocabulary.words.at(i); }

  std::string render(const Word& w) const {
    std::string out;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (inventory.format() == WordFormat::spaced && k > 0) out += ' ';
      if (inventory.is_symbol(w[k]))
        out += inventory.symbol(w[k]);
      else if (w[k] == inventory.eos())
        out += "</s>";
      else
        out += "<?>";
    }
    return out;
  }
  std::string render(std::size_t i) const { return render(word(i)); }
};

// ---------------------------------------------------------------------------
// UTF-8

namespace detail {

/// Splits a UTF-8 string into one string per codepoint. Rejects overlong
/// forms, surrogates and truncated sequences.
inline std::vector<std::string> split_codepoints(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw InputError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > s.size())
      throw InputError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80)
        throw InputError("invalid UTF-8 continuation byte at offset " +
                         std::to_string(i + k));
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      throw InputError("invalid UTF-8 codepoint at offset " + std::to_string(i));
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline std::string encode_codepoint(std::uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

inline std::vector<std::string> split_tokens(std::string_view line, WordFormat format) {
  if (format == WordFormat::plain) return split_codepoints(line);
  split_codepoints(line);  // validation only
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r';
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Word lists

struct LoadResult {
  Lexicon lexicon;
  std::size_t skipped_empty_lines = 0;
};

/// Builds a lexicon from in-memory word strings, assigning symbol ids in
/// first-occurrence order.
inline LoadResult parse_vocabulary(std::string_view text, WordFormat format,
                                   Language language = Language::lost) {
  LoadResult result;
  result.lexicon.inventory = SymbolInventory(format);
  result.lexicon.vocabulary.language = language;
  for (auto line : detail::split_lines(text)) {
    auto tokens = detail::split_tokens(line, format);
    if (tokens.empty() || detail::is_blank(line)) {
      ++result.skipped_empty_lines;
      continue;
    }
    Word w;
    w.reserve(tokens.size());
    for (const auto& t : tokens) w.push_back(result.lexicon.inventory.add(t));
    result.lexicon.vocabulary.words.push_back(std::move(w));
  }
  if (result.lexicon.vocabulary.empty())
    throw InputError("word list contains no words");
  return result;
}

inline LoadResult load_vocabulary(const std::filesystem::path& path, WordFormat format,
                                  Language language = Language::lost) {
  const std::string text = detail::read_file(path);
  if (text.empty()) throw InputError("word list '" + path.string() + "' is empty");
  try {
    return parse_vocabulary(text, format, language);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline void write_vocabulary(const std::filesystem::path& path, const Lexicon& lex) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  for (const auto& w : lex.vocabulary.words) out << lex.render(w) << '\n';
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Gold cognate table

/// Ground-truth (lost index, known index) pairs, sorted and unique. Used for
/// evaluation only.
class GoldTable {
 public:
  GoldTable() = default;
  explicit GoldTable(std::vector<std::pair<std::size_t, std::size_t>> pairs)
      : pairs_(std::move(pairs)) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  bool contains(std::size_t lost, std::size_t known) const {
    return std::binary_search(pairs_.begin(), pairs_.end(), std::make_pair(lost, known));
  }

  /// Distinct lost indices that have at least one gold partner.
  std::vector<std::size_t> lost_words() const {
    std::vector<std::size_t> out;
    for (const auto& [i, j] : pairs_)
      if (out.empty() || out.back() != i) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> partners(std::size_t lost) const {
    std::vector<std::size_t> out;
    auto it = std::lower_bound(pairs_.begin(), pairs_.end(), std::make_pair(lost, std::size_t{0}));
    for (; it != pairs_.end() && it->first == lost; ++it) out.push_back(it->second);
    return out;
  }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

namespace detail {

/// Maps rendered word strings to their first index in the lexicon.
inline std::unordered_map<std::string, std::size_t> word_index(const Lexicon& lex) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < lex.size(); ++i) idx.emplace(lex.render(i), i);
  return idx;
}

inline std::string normalize_word(std::string_view field, WordFormat format) {
  auto toks = split_tokens(field, format);
  std::string out;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (format == WordFormat::spaced && k > 0) out += ' ';
    out += toks[k];
  }
  return out;
}

}  // namespace detail

inline GoldTable parse_gold(std::string_view text, const Lexicon& lost, const Lexicon& known) {
  const auto lost_idx = detail::word_index(lost);
  const auto known_idx = detail::word_index(known);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw InputError("gold line " + std::to_string(line_no) + ": expected two tab-separated columns");
    auto lw = detail::normalize_word(line.substr(0, tab), lost.inventory.format());
    auto kw = detail::normalize_word(line.substr(tab + 1), known.inventory.format());
    auto li = lost_idx.find(lw);
    if (li == lost_idx.end())
      throw InputError("gold line " + std::to_string(line_no) + ": lost word '" + lw +
                       "' not in vocabulary");
    auto ki = known_idx.find(kw);
    if (ki == known_idx.end())
      throw InputError("gold line " + std::to_string(line_no) + ": known word '" + kw +
                       "' not in vocabulary");
    pairs.emplace_back(li->second, ki->second);
  }
  return GoldTable(std::move(pairs));
}

inline GoldTable load_gold(const std::filesystem::path& path, const Lexicon& lost,
                           const Lexicon& known) {
  return parse_gold(detail::read_file(path), lost, known);
}

inline void write_gold(const std::filesystem::path& path, const GoldTable& gold,
                       const Lexicon& lost, const Lexicon& known) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  for (const auto& [i, j] : gold.pairs()) out << lost.render(i) << '\t' << known.render(j) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SynthSpec {
  std::size_t vocabulary_size = 200;  // base cognate pairs before removal
  int symbols = 20;                   // known alphabet size
  std::uint64_t substitution_seed = 0;
  double insertion_rate = 0.0;
  double deletion_rate = 0.0;
  double unpaired_lost = 0.0;   // fraction of pairs whose lost word is dropped
  double unpaired_known = 0.0;  // fraction of pairs whose known word is dropped
  bool syllabic = false;
  int syllables = 0;            // lost syllabary size in syllabic mode; 0 = 2 * symbols
  double zipf_exponent = 1.0;   // symbol frequency skew; 0 gives uniform symbols
  int min_length = 3;
  int max_length = 10;

  void validate() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(insertion_rate) || !in01(deletion_rate))
      throw ConfigError("insertion/deletion rates must lie in [0,1]");
    if (!(unpaired_lost >= 0.0 && unpaired_lost < 1.0) ||
        !(unpaired_known >= 0.0 && unpaired_known < 1.0))
      throw ConfigError("unpaired fractions must lie in [0,1)");
    if (unpaired_lost + unpaired_known >= 1.0)
      throw ConfigError("unpaired fractions remove disjoint pairs and must sum below 1");
    if (vocabulary_size == 0) throw ConfigError("vocabulary size must be positive");
    if (min_length < 1 || max_length < min_length)
      throw ConfigError("invalid word length range");
    if (symbols < 2) throw ConfigError("symbol count too small for a substitution alphabet");
    if (syllabic) {
      const long need = syllable_count();
      if (need < 2 || need > static_cast<long>(symbols) * symbols)
        throw ConfigError("symbol count too small for the requested syllabary (" +
                          std::to_string(need) + " syllables over " +
                          std::to_string(symbols) + " symbols)");
      if (max_length < 2) throw ConfigError("syllabic words need max length >= 2");
    }
    if (zipf_exponent < 0.0) throw ConfigError("zipf exponent must be nonnegative");
  }

  int syllable_count() const { return syllables > 0 ? syllables : 2 * symbols; }
};

struct SynthCorpus {
  Lexicon lost;
  Lexicon known;
  GoldTable gold;
};

namespace detail {

inline std::string known_symbol_name(int k) {
  if (k < 26) return std::string(1, static_cast<char>('a' + k));
  return encode_codepoint(0x03B1 + static_cast<std::uint32_t>(k - 26) % 0x40 +
                          0x100 * static_cast<std::uint32_t>((k - 26) / 0x40));
}

inline std::string lost_symbol_name(int k) {
  return encode_codepoint(0x10000 + static_cast<std::uint32_t>(k));
}

inline std::vector<double> zipf_weights(int n, double exponent) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(k)] = 1.0 / std::pow(k + 1.0, exponent);
  return w;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[uniform_index(rng, k)]);
}

inline Lexicon lexicon_from_strings(const std::vector<std::vector<std::string>>& words,
                                    Language language) {
  Lexicon lex;
  lex.inventory = SymbolInventory(WordFormat::plain);
  lex.vocabulary.language = language;
  for (const auto& w : words) {
    Word ids;
    for (const auto& s : w) ids.push_back(lex.inventory.add(s));
    lex.vocabulary.words.push_back(std::move(ids));
  }
  return lex;
}

}  // namespace detail

/// Generates a lost/known pair of vocabularies with a known cognate mapping.
///
/// Known words are drawn with Zipf-distributed symbols; lost words are a
/// random bijective relabeling (or, in syllabic mode, a syllable encoding) of
/// their partner followed by per-position deletions and insertions. Both
/// sides are shuffled independently. Deterministic given `seed`.
inline SynthCorpus synthesize(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, {0x5157});
  Rng subst_rng = make_rng(spec.substitution_seed ^ seed, {0x5eed});

  const int n_known = spec.symbols;
  const int n_lost = spec.syllabic ? spec.syllable_count() : n_known;

  // Lost symbol k expands to `expansion[k]` known symbols.
  std::vector<std::vector<int>> expansion(static_cast<std::size_t>(n_lost));
  if (spec.syllabic) {
    std::vector<std::pair<int, int>> all;
    for (int a = 0; a < n_known; ++a)
      for (int b = 0; b < n_known; ++b) all.emplace_back(a, b);
    detail::shuffle(all, subst_rng);
    for (int k = 0; k < n_lost; ++k)
      expansion[static_cast<std::size_t>(k)] = {all[static_cast<std::size_t>(k)].first,
                                                all[static_cast<std::size_t>(k)].second};
  } else {
    std::vector<int> perm(static_cast<std::size_t>(n_known));
    for (int k = 0; k < n_known; ++k) perm[static_cast<std::size_t>(k)] = k;
    detail::shuffle(perm, subst_rng);
    // lost symbol perm[k] encodes known symbol k
    for (int k = 0; k < n_known; ++k) expansion[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = {k};
  }

  // Symbol frequencies: in alphabetic mode known symbols are Zipf-ranked in a
  // random order; in syllabic mode the lost syllables are.
  const int n_freq = spec.syllabic ? n_lost : n_known;
  auto weights = detail::zipf_weights(n_freq, spec.zipf_exponent);
  detail::shuffle(weights, subst_rng);

  // Inverse of the alphabetic substitution: known symbol -> lost symbol.
  std::vector<int> encode(static_cast<std::size_t>(n_known), -1);
  if (!spec.syllabic)
    for (int k = 0; k < n_lost; ++k) encode[static_cast<std::size_t>(expansion[static_cast<std::size_t>(k)][0])] = k;

  const std::size_t n_pairs = spec.vocabulary_size;
  std::vector<std::vector<int>> known_words, lost_words;
  std::set<std::vector<int>> seen_known, seen_lost;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * n_pairs + 10000;
  while (known_words.size() < n_pairs) {
    if (++attempts > max_attempts)
      throw ConfigError("cannot generate enough distinct words; enlarge the alphabet or length range");
    std::vector<int> clean_lost, known;
    if (spec.syllabic) {
      const int lo = std::max(1, (spec.min_length + 1) / 2);
      const int hi = std::max(lo, spec.max_length / 2);
      const int len = lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
      for (int t = 0; t < len; ++t) {
        const int s = static_cast<int>(sample_discrete(rng, weights));
        clean_lost.push_back(s);
        for (int c : expansion[static_cast<std::size_t>(s)]) known.push_back(c);
      }
    } else {
      const int len = spec.min_length +
                      static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.max_length - spec.min_length + 1)));
      for (int t = 0; t < len; ++t) {
        const int c = static_cast<int>(sample_discrete(rng, weights));
        known.push_back(c);
        clean_lost.push_back(encode[static_cast<std::size_t>(c)]);
      }
    }
    std::vector<int> lost;
    for (int s : clean_lost) {
      if (uniform01(rng) >= spec.deletion_rate) lost.push_back(s);
      if (uniform01(rng) < spec.insertion_rate)
        lost.push_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_lost))));
    }
    if (lost.empty()) lost.push_back(clean_lost.front());
    if (seen_known.count(known) || seen_lost.count(lost)) continue;
    seen_known.insert(known);
    seen_lost.insert(lost);
    known_words.push_back(std::move(known));
    lost_words.push_back(std::move(lost));
  }

  // Drop disjoint subsets of pairs from each side.
  std::vector<std::size_t> order(n_pairs);
  for (std::size_t k = 0; k < n_pairs; ++k) order[k] = k;
  detail::shuffle(order, rng);
  const auto drop_known = static_cast<std::size_t>(std::llround(spec.unpaired_known * static_cast<double>(n_pairs)));
  const auto drop_lost = static_cast<std::size_t>(std::llround(spec.unpaired_lost * static_cast<double>(n_pairs)));
  std::vector<bool> keep_known(n_pairs, true), keep_lost(n_pairs, true);
  for (std::size_t k = 0; k < drop_known && k < n_pairs; ++k) keep_known[order[k]] = false;
  for (std::size_t k = drop_known; k < drop_known + drop_lost && k < n_pairs; ++k)
    keep_lost[order[k]] = false;

  std::vector<std::size_t> lost_ids, known_ids;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    if (keep_lost[k]) lost_ids.push_back(k);
    if (keep_known[k]) known_ids.push_back(k);
  }
  detail::shuffle(lost_ids, rng);
  detail::shuffle(known_ids, rng);

  std::vector<std::vector<std::string>> lost_str, known_str;
  std::vector<std::size_t> known_pos(n_pairs, static_cast<std::size_t>(-1));
  for (std::size_t p = 0; p < known_ids.size(); ++p) {
    known_pos[known_ids[p]] = p;
    std::vector<std::string> w;
    for (int c : known_words[known_ids[p]]) w.push_back(detail::known_symbol_name(c));
    known_str.push_back(std::move(w));
  }
  std::vector<std::pair<std::size_t, std::size_t>> gold;
  for (std::size_t p = 0; p < lost_ids.size(); ++p) {
    std::vector<std::string> w;
    for (int s : lost_words[lost_ids[p]]) w.push_back(detail::lost_symbol_name(s));
    lost_str.push_back(std::move(w));
    if (keep_known[lost_ids[p]]) gold.emplace_back(p, known_pos[lost_ids[p]]);
  }

  SynthCorpus out;
  out.lost = detail::lexicon_from_strings(lost_str, Language::lost);
  out.known = detail::lexicon_from_strings(known_str, Language::known);
  out.gold = GoldTable(std::move(gold));
  return out;
}

/// Key=value metadata recording the generator settings.
inline std::string synth_metadata(const SynthSpec& spec, std::uint64_t seed) {
  std::ostringstream out;
  out.precision(17);
  out << "seed=" << seed << '\n'
      << "vocabulary_size=" << spec.vocabulary_size << '\n'
      << "symbols=" << spec.symbols << '\n'
      << "substitution_seed=" << spec.substitution_seed << '\n'
      << "insertion_rate=" << spec.insertion_rate << '\n'
      << "deletion_rate=" << spec.deletion_rate << '\n'
      << "unpaired_lost=" << spec.unpaired_lost << '\n'
      << "unpaired_known=" << spec.unpaired_known << '\n'
      << "syllabic=" << (spec.syllabic ? 1 : 0) << '\n'
      << "syllables=" << spec.syllable_count() << '\n'
      << "zipf_exponent=" << spec.zipf_exponent << '\n'
      << "min_length=" << spec.min_length << '\n'
      << "max_length=" << spec.max_length << '\n'
      << "format=plain\n";
  return out.str();
}

struct SynthPaths {
  std::filesystem::path lost, known, gold, metadata;
};

/// Writes lost.txt, known.txt, gold.tsv and synth.meta into `dir`.
inline SynthPaths write_synth_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus,
                                     const SynthSpec& spec, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  SynthPaths p{dir / "lost.txt", dir / "known.txt", dir / "gold.tsv", dir / "synth.meta"};
  write_vocabulary(p.lost, corpus.lost);
  write_vocabulary(p.known, corpus.known);
  write_gold(p.gold, corpus.gold, corpus.lost, corpus.known);
  std::ofstream meta(p.metadata, std::ios::binary);
  if (!meta) throw InputError("cannot write '" + p.metadata.string() + "'");
  meta << synth_metadata(spec, seed);
  return p;
}

}  // namespace decipher
