#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasprobe/errors.hpp"

namespace biasprobe {

// The probe corpus is a lexical hierarchy: categories and sub-categories
// classify scenario templates (STEMs); each template carries two slots for an
// opposing pair of group descriptors (XFactors), and each XFactor brings a
// pool of interchangeable surface forms plus the context tags it applies to.

struct TaxonomyEntry {
  std::string category;
  std::string sub_category;

  bool operator==(const TaxonomyEntry&) const = default;
};

struct XFactorEntry {
  std::string id;
  std::string category;        // must name a taxonomy category
  std::string canonical_term;
  std::vector<std::string> synonyms;
  std::vector<std::string> contexts;  // culture/nation/organization tags

  /// The surfaces a generator may draw: canonical term first, then synonyms.
  std::vector<std::string> draw_pool() const;

  bool operator==(const XFactorEntry&) const = default;
};

struct StemTemplate {
  std::string id;
  std::string scenario_family;  // join key across the levels of one scenario
  std::string category;
  std::string sub_category;
  int level = 1;                // complexity tier, 1..3
  std::string pre_stem;
  std::string mid_stem;
  std::string post_stem;
  std::string query;
  std::string xfactor1_id;
  std::string xfactor2_id;

  bool operator==(const StemTemplate&) const = default;
};

struct LexiconMetadata {
  std::string name;
  std::string version;

  bool operator==(const LexiconMetadata&) const = default;
};

struct Lexicon {
  LexiconMetadata metadata;
  std::vector<TaxonomyEntry> taxonomy;
  std::vector<XFactorEntry> xfactors;
  std::vector<StemTemplate> templates;

  const XFactorEntry* find_xfactor(std::string_view id) const;
  const StemTemplate* find_template_by_id(std::string_view id) const;
  const StemTemplate* find_template(std::string_view scenario_family, int level) const;

  /// Sorted, distinct scenario family names.
  std::vector<std::string> scenario_families() const;

  /// Sorted, distinct levels present for one family (empty if unknown).
  std::vector<int> levels_for_family(std::string_view scenario_family) const;

  bool operator==(const Lexicon&) const = default;
};

struct Violation {
  std::string path;     // e.g. "templates[3].xfactor1_id"
  std::string code;     // stable machine string, e.g. "unresolved-xfactor-ref"
  std::string message;

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

/// Lowercases and collapses whitespace runs; the normalization under which
/// surface forms must be distinct.
std::string normalize_surface(std::string_view text);

/// Parses the JSON lexicon document. Structural only: field presence, types
/// and unknown-key rejection. Semantic rules are validate_lexicon's job.
/// Throws ParseError.
Lexicon parse_lexicon(std::string_view document);

/// Reads and parses a lexicon file. Throws Error if unreadable, ParseError on
/// structural problems.
Lexicon load_lexicon_file(const std::string& path);

/// Inverse of parse_lexicon: parse_lexicon(serialize_lexicon(L)) == L.
std::string serialize_lexicon(const Lexicon& lexicon);

/// Reports every semantic violation, in document order. Empty report = valid.
ValidationReport validate_lexicon(const Lexicon& lexicon);

/// Keeps the xfactors carrying `context`, the templates whose xfactor pair
/// both survive, and the taxonomy entries still referenced by a surviving
/// template or xfactor. Throws UnknownContextError if no entry carries the
/// tag. Input must be valid; the result is valid.
Lexicon filter_by_context(const Lexicon& lexicon, std::string_view context);

/// Keeps the templates whose category is in `categories` plus the xfactors
/// they reference. Throws UnknownCategoryError for names absent from the
/// taxonomy. `categories` must be non-empty.
Lexicon filter_by_category(const Lexicon& lexicon, const std::set<std::string>& categories);

/// Number of distinct prompts one template can produce: the product of the
/// two draw-pool sizes.
std::uint64_t enumerate_probe_space(const StemTemplate& tmpl, const Lexicon& lexicon);

}  // namespace biasprobe
