#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "biasprobe/lexicon.hpp"

namespace biasprobe {

enum class ArticleMode {
  Literal,  // leave "A/An" placeholders untouched
  Resolve,  // pick "a"/"an" from the following word
};

struct GeneratorConfig {
  std::uint64_t master_seed = 0;
  ArticleMode article_mode = ArticleMode::Literal;
  int samples_per_level = 1;
};

/// One concrete prompt instance, with enough provenance to replay it.
struct Probe {
  std::string template_id;
  std::string scenario_family;
  int level = 1;
  std::string x1_surface;
  std::string x2_surface;
  std::string prompt;
  std::uint64_t draw_index = 0;
  std::uint64_t stream_seed = 0;

  bool operator==(const Probe&) const = default;
};

/// Joins pre_stem, x1, mid_stem, x2, post_stem, query with single spaces,
/// trimming each segment and skipping empty ones. Internal whitespace runs
/// are collapsed, so the result never holds two consecutive spaces.
///
/// In Resolve mode every standalone "A/An" token becomes "an" when the next
/// word starts with a vowel letter, else "a"; it keeps its capital only at a
/// sentence start. The vowel-letter test is orthographic, not phonetic
/// ("hour" resolves to "a hour").
std::string assemble_prompt(const StemTemplate& tmpl, std::string_view x1_surface,
                            std::string_view x2_surface, ArticleMode article_mode);

/// Per-probe PRNG seed: splitmix64_mix(master_seed ^ fnv1a64(family:level:draw)).
/// Pinned so recorded stream seeds mean the same thing everywhere.
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::string_view scenario_family,
                                 int level, std::uint64_t draw_index);

/// Draws one surface form for each xfactor (x1 first, then x2, from a single
/// stream) and assembles the prompt. Pure: same inputs, same Probe.
Probe sample_probe(const StemTemplate& tmpl, const Lexicon& lexicon,
                   const GeneratorConfig& config, std::uint64_t draw_index);

/// Probes for draw_index 0..samples_per_level-1, in order.
std::vector<Probe> sample_batch(const StemTemplate& tmpl, const Lexicon& lexicon,
                                const GeneratorConfig& config);

std::string_view to_string(ArticleMode mode);
ArticleMode article_mode_from_string(std::string_view text);  // throws Error

}  // namespace biasprobe
