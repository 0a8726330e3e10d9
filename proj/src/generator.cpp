#include "biasprobe/generator.hpp"

#include <cctype>
#include <sstream>

#include "biasprobe/rng.hpp"

namespace biasprobe {
namespace {

bool iequals_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

bool is_vowel_letter(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return true;
    default:
      return false;
  }
}

// The first letter or digit decides the article; leading punctuation such as
// quotes is skipped.
bool next_word_starts_with_vowel(std::string_view word) {
  for (char c : word) {
    if (std::isalnum(static_cast<unsigned char>(c))) return is_vowel_letter(c);
  }
  return false;
}

bool ends_sentence(std::string_view token) {
  if (token.empty()) return false;
  char last = token.back();
  return last == '.' || last == '!' || last == '?';
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(' ', start);
    if (end == std::string_view::npos) end = text.size();
    if (end > start) words.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

std::string resolve_articles(std::string_view prompt) {
  std::vector<std::string> words = split_words(prompt);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!iequals_ascii(words[i], "a/an")) continue;
    bool vowel = i + 1 < words.size() && next_word_starts_with_vowel(words[i + 1]);
    bool sentence_start = i == 0 || ends_sentence(words[i - 1]);
    bool keep_capital =
        sentence_start && std::isupper(static_cast<unsigned char>(words[i][0]));
    std::string article = vowel ? "an" : "a";
    if (keep_capital) article[0] = static_cast<char>(std::toupper(article[0]));
    words[i] = article;
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  return out;
}

// Trim and collapse internal whitespace runs to single spaces.
std::string clean_segment(std::string_view segment) {
  std::string out;
  out.reserve(segment.size());
  bool pending_space = false;
  for (unsigned char c : segment) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace

std::string assemble_prompt(const StemTemplate& tmpl, std::string_view x1_surface,
                            std::string_view x2_surface, ArticleMode article_mode) {
  if (x1_surface.empty() || x2_surface.empty()) {
    throw Error("assemble_prompt: surface forms must be non-empty");
  }
  const std::string_view segments[] = {tmpl.pre_stem, x1_surface, tmpl.mid_stem,
                                       x2_surface,    tmpl.post_stem, tmpl.query};
  std::string prompt;
  for (std::string_view segment : segments) {
    std::string cleaned = clean_segment(segment);
    if (cleaned.empty()) continue;
    if (!prompt.empty()) prompt.push_back(' ');
    prompt += cleaned;
  }
  if (article_mode == ArticleMode::Resolve) {
    return resolve_articles(prompt);
  }
  return prompt;
}

std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                 std::string_view scenario_family, int level,
                                 std::uint64_t draw_index) {
  std::string key;
  key.reserve(scenario_family.size() + 24);
  key.append(scenario_family);
  key.push_back(':');
  key.append(std::to_string(level));
  key.push_back(':');
  key.append(std::to_string(draw_index));
  return splitmix64_mix(master_seed ^ fnv1a64(key));
}

Probe sample_probe(const StemTemplate& tmpl, const Lexicon& lexicon,
                   const GeneratorConfig& config, std::uint64_t draw_index) {
  const XFactorEntry* x1 = lexicon.find_xfactor(tmpl.xfactor1_id);
  const XFactorEntry* x2 = lexicon.find_xfactor(tmpl.xfactor2_id);
  if (x1 == nullptr || x2 == nullptr) {
    throw Error("sample_probe: template \"" + tmpl.id +
                "\" has unresolved xfactor references");
  }
  const std::vector<std::string> pool1 = x1->draw_pool();
  const std::vector<std::string> pool2 = x2->draw_pool();

  Probe probe;
  probe.template_id = tmpl.id;
  probe.scenario_family = tmpl.scenario_family;
  probe.level = tmpl.level;
  probe.draw_index = draw_index;
  probe.stream_seed =
      derive_stream_seed(config.master_seed, tmpl.scenario_family, tmpl.level, draw_index);

  SplitMix64 stream(probe.stream_seed);
  probe.x1_surface = pool1[stream.next_below(pool1.size())];
  probe.x2_surface = pool2[stream.next_below(pool2.size())];
  probe.prompt =
      assemble_prompt(tmpl, probe.x1_surface, probe.x2_surface, config.article_mode);
  return probe;
}

std::vector<Probe> sample_batch(const StemTemplate& tmpl, const Lexicon& lexicon,
                                const GeneratorConfig& config) {
  if (config.samples_per_level < 1) {
    throw Error("sample_batch: samples_per_level must be >= 1");
  }
  std::vector<Probe> probes;
  probes.reserve(static_cast<std::size_t>(config.samples_per_level));
  for (int i = 0; i < config.samples_per_level; ++i) {
    probes.push_back(sample_probe(tmpl, lexicon, config, static_cast<std::uint64_t>(i)));
  }
  return probes;
}

std::string_view to_string(ArticleMode mode) {
  return mode == ArticleMode::Literal ? "literal" : "resolve";
}

ArticleMode article_mode_from_string(std::string_view text) {
  if (text == "literal") return ArticleMode::Literal;
  if (text == "resolve") return ArticleMode::Resolve;
  throw Error("unknown article mode \"" + std::string(text) +
              "\" (expected \"literal\" or \"resolve\")");
}

}  // namespace biasprobe
