#include "biasprobe/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace biasprobe {
namespace {

using nlohmann::json;

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const json& require_key(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(ParseError::Kind::MissingField, path,
                     std::string("missing required key \"") + key + "\"");
  }
  return *it;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& path) {
  for (const auto& item : obj.items()) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return item.key() == k; });
    if (!known) {
      throw ParseError(ParseError::Kind::UnknownKey, path,
                       "unknown key \"" + item.key() + "\"");
    }
  }
}

const json& require_object(const json& value, const std::string& path) {
  if (!value.is_object()) {
    throw ParseError(ParseError::Kind::TypeMismatch, path, "expected an object");
  }
  return value;
}

const json& require_array(const json& value, const std::string& path) {
  if (!value.is_array()) {
    throw ParseError(ParseError::Kind::TypeMismatch, path, "expected an array");
  }
  return value;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json& value = require_key(obj, key, path);
  if (!value.is_string()) {
    throw ParseError(ParseError::Kind::TypeMismatch, path + "." + key,
                     "expected a string");
  }
  return value.get<std::string>();
}

int require_int(const json& obj, const char* key, const std::string& path) {
  const json& value = require_key(obj, key, path);
  if (!value.is_number_integer()) {
    throw ParseError(ParseError::Kind::TypeMismatch, path + "." + key,
                     "expected an integer");
  }
  auto wide = value.get<std::int64_t>();
  if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) {
    throw ParseError(ParseError::Kind::TypeMismatch, path + "." + key,
                     "integer out of range");
  }
  return static_cast<int>(wide);
}

std::vector<std::string> require_string_array(const json& obj, const char* key,
                                              const std::string& path) {
  const std::string element_path = path + "." + key;
  const json& value = require_key(obj, key, path);
  require_array(value, element_path);
  std::vector<std::string> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_string()) {
      throw ParseError(ParseError::Kind::TypeMismatch, index_path(element_path, i),
                       "expected a string");
    }
    out.push_back(value[i].get<std::string>());
  }
  return out;
}

TaxonomyEntry parse_taxonomy_entry(const json& value, const std::string& path) {
  require_object(value, path);
  reject_unknown_keys(value, {"category", "sub_category"}, path);
  TaxonomyEntry entry;
  entry.category = require_string(value, "category", path);
  entry.sub_category = require_string(value, "sub_category", path);
  return entry;
}

XFactorEntry parse_xfactor_entry(const json& value, const std::string& path) {
  require_object(value, path);
  reject_unknown_keys(value, {"id", "category", "canonical_term", "synonyms", "contexts"},
                      path);
  XFactorEntry entry;
  entry.id = require_string(value, "id", path);
  entry.category = require_string(value, "category", path);
  entry.canonical_term = require_string(value, "canonical_term", path);
  entry.synonyms = require_string_array(value, "synonyms", path);
  entry.contexts = require_string_array(value, "contexts", path);
  return entry;
}

StemTemplate parse_stem_template(const json& value, const std::string& path) {
  require_object(value, path);
  reject_unknown_keys(value,
                      {"id", "scenario_family", "category", "sub_category", "level",
                       "pre_stem", "mid_stem", "post_stem", "query", "xfactor1_id",
                       "xfactor2_id"},
                      path);
  StemTemplate tmpl;
  tmpl.id = require_string(value, "id", path);
  tmpl.scenario_family = require_string(value, "scenario_family", path);
  tmpl.category = require_string(value, "category", path);
  tmpl.sub_category = require_string(value, "sub_category", path);
  tmpl.level = require_int(value, "level", path);
  tmpl.pre_stem = require_string(value, "pre_stem", path);
  tmpl.mid_stem = require_string(value, "mid_stem", path);
  tmpl.post_stem = require_string(value, "post_stem", path);
  tmpl.query = require_string(value, "query", path);
  tmpl.xfactor1_id = require_string(value, "xfactor1_id", path);
  tmpl.xfactor2_id = require_string(value, "xfactor2_id", path);
  return tmpl;
}

}  // namespace

std::vector<std::string> XFactorEntry::draw_pool() const {
  std::vector<std::string> pool;
  pool.reserve(1 + synonyms.size());
  pool.push_back(canonical_term);
  pool.insert(pool.end(), synonyms.begin(), synonyms.end());
  return pool;
}

const XFactorEntry* Lexicon::find_xfactor(std::string_view id) const {
  for (const auto& entry : xfactors) {
    if (entry.id == id) return &entry;
  }
  return nullptr;
}

const StemTemplate* Lexicon::find_template_by_id(std::string_view id) const {
  for (const auto& tmpl : templates) {
    if (tmpl.id == id) return &tmpl;
  }
  return nullptr;
}

const StemTemplate* Lexicon::find_template(std::string_view scenario_family,
                                           int level) const {
  for (const auto& tmpl : templates) {
    if (tmpl.scenario_family == scenario_family && tmpl.level == level) return &tmpl;
  }
  return nullptr;
}

std::vector<std::string> Lexicon::scenario_families() const {
  std::set<std::string> names;
  for (const auto& tmpl : templates) names.insert(tmpl.scenario_family);
  return {names.begin(), names.end()};
}

std::vector<int> Lexicon::levels_for_family(std::string_view scenario_family) const {
  std::set<int> levels;
  for (const auto& tmpl : templates) {
    if (tmpl.scenario_family == scenario_family) levels.insert(tmpl.level);
  }
  return {levels.begin(), levels.end()};
}

std::string normalize_surface(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

Lexicon parse_lexicon(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseError::Kind::MalformedDocument, "", e.what());
  }
  require_object(root, "$");
  reject_unknown_keys(root, {"metadata", "taxonomy", "xfactors", "templates"}, "$");

  Lexicon lexicon;

  const json& metadata = require_key(root, "metadata", "$");
  require_object(metadata, "metadata");
  reject_unknown_keys(metadata, {"name", "version"}, "metadata");
  lexicon.metadata.name = require_string(metadata, "name", "metadata");
  lexicon.metadata.version = require_string(metadata, "version", "metadata");

  const json& taxonomy = require_key(root, "taxonomy", "$");
  require_array(taxonomy, "taxonomy");
  for (std::size_t i = 0; i < taxonomy.size(); ++i) {
    lexicon.taxonomy.push_back(parse_taxonomy_entry(taxonomy[i], index_path("taxonomy", i)));
  }

  const json& xfactors = require_key(root, "xfactors", "$");
  require_array(xfactors, "xfactors");
  for (std::size_t i = 0; i < xfactors.size(); ++i) {
    lexicon.xfactors.push_back(parse_xfactor_entry(xfactors[i], index_path("xfactors", i)));
  }

  const json& templates = require_key(root, "templates", "$");
  require_array(templates, "templates");
  for (std::size_t i = 0; i < templates.size(); ++i) {
    lexicon.templates.push_back(
        parse_stem_template(templates[i], index_path("templates", i)));
  }

  return lexicon;
}

Lexicon load_lexicon_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read lexicon file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_lexicon(buffer.str());
}

std::string serialize_lexicon(const Lexicon& lexicon) {
  json root;
  root["metadata"] = {{"name", lexicon.metadata.name},
                      {"version", lexicon.metadata.version}};
  root["taxonomy"] = json::array();
  for (const auto& entry : lexicon.taxonomy) {
    root["taxonomy"].push_back(
        {{"category", entry.category}, {"sub_category", entry.sub_category}});
  }
  root["xfactors"] = json::array();
  for (const auto& entry : lexicon.xfactors) {
    root["xfactors"].push_back({{"id", entry.id},
                                {"category", entry.category},
                                {"canonical_term", entry.canonical_term},
                                {"synonyms", entry.synonyms},
                                {"contexts", entry.contexts}});
  }
  root["templates"] = json::array();
  for (const auto& tmpl : lexicon.templates) {
    root["templates"].push_back({{"id", tmpl.id},
                                 {"scenario_family", tmpl.scenario_family},
                                 {"category", tmpl.category},
                                 {"sub_category", tmpl.sub_category},
                                 {"level", tmpl.level},
                                 {"pre_stem", tmpl.pre_stem},
                                 {"mid_stem", tmpl.mid_stem},
                                 {"post_stem", tmpl.post_stem},
                                 {"query", tmpl.query},
                                 {"xfactor1_id", tmpl.xfactor1_id},
                                 {"xfactor2_id", tmpl.xfactor2_id}});
  }
  return root.dump(2) + "\n";
}

ValidationReport validate_lexicon(const Lexicon& lexicon) {
  ValidationReport report;
  auto add = [&report](std::string path, std::string code, std::string message) {
    report.push_back({std::move(path), std::move(code), std::move(message)});
  };

  std::set<std::string> categories;  // category names present in the taxonomy
  std::map<std::pair<std::string, std::string>, std::size_t> taxonomy_pairs;
  for (std::size_t i = 0; i < lexicon.taxonomy.size(); ++i) {
    const auto& entry = lexicon.taxonomy[i];
    const std::string path = index_path("taxonomy", i);
    if (entry.category.empty()) {
      add(path + ".category", "empty-category", "category must be non-empty");
    }
    if (entry.sub_category.empty()) {
      add(path + ".sub_category", "empty-sub-category", "sub_category must be non-empty");
    }
    auto key = std::make_pair(entry.category, entry.sub_category);
    auto [it, inserted] = taxonomy_pairs.emplace(key, i);
    if (!inserted) {
      add(path, "duplicate-taxonomy-pair",
          "(" + entry.category + ", " + entry.sub_category + ") duplicates " +
              index_path("taxonomy", it->second));
    }
    categories.insert(entry.category);
  }

  std::map<std::string, std::size_t> xfactor_ids;
  for (std::size_t i = 0; i < lexicon.xfactors.size(); ++i) {
    const auto& entry = lexicon.xfactors[i];
    const std::string path = index_path("xfactors", i);
    auto [it, inserted] = xfactor_ids.emplace(entry.id, i);
    if (!inserted) {
      add(path + ".id", "duplicate-xfactor-id",
          "id \"" + entry.id + "\" duplicates " + index_path("xfactors", it->second));
    }
    if (!categories.count(entry.category)) {
      add(path + ".category", "unknown-xfactor-category",
          "category \"" + entry.category + "\" is not in the taxonomy");
    }
    if (entry.canonical_term.empty()) {
      add(path + ".canonical_term", "empty-canonical-term",
          "canonical_term must be non-empty");
    }
    std::set<std::string> surfaces{normalize_surface(entry.canonical_term)};
    for (std::size_t j = 0; j < entry.synonyms.size(); ++j) {
      if (!surfaces.insert(normalize_surface(entry.synonyms[j])).second) {
        add(path + ".synonyms[" + std::to_string(j) + "]", "duplicate-surface-form",
            "\"" + entry.synonyms[j] + "\" duplicates another surface form of \"" +
                entry.id + "\"");
      }
    }
    if (entry.contexts.empty()) {
      add(path + ".contexts", "empty-contexts",
          "xfactor \"" + entry.id + "\" has no context tags");
    }
    for (std::size_t j = 0; j < entry.contexts.size(); ++j) {
      if (entry.contexts[j].empty()) {
        add(path + ".contexts[" + std::to_string(j) + "]", "empty-context-tag",
            "context tags must be non-empty");
      }
    }
  }

  std::map<std::string, std::size_t> template_ids;
  std::map<std::pair<std::string, int>, std::size_t> family_levels;
  for (std::size_t i = 0; i < lexicon.templates.size(); ++i) {
    const auto& tmpl = lexicon.templates[i];
    const std::string path = index_path("templates", i);
    auto [id_it, id_inserted] = template_ids.emplace(tmpl.id, i);
    if (!id_inserted) {
      add(path + ".id", "duplicate-template-id",
          "id \"" + tmpl.id + "\" duplicates " + index_path("templates", id_it->second));
    }
    if (!taxonomy_pairs.count({tmpl.category, tmpl.sub_category})) {
      add(path, "unknown-template-taxonomy",
          "(" + tmpl.category + ", " + tmpl.sub_category + ") is not in the taxonomy");
    }
    if (tmpl.level < 1 || tmpl.level > 3) {
      add(path + ".level", "level-out-of-range",
          "level " + std::to_string(tmpl.level) + " is outside 1..3");
    } else {
      auto key = std::make_pair(tmpl.scenario_family, tmpl.level);
      auto [fl_it, fl_inserted] = family_levels.emplace(key, i);
      if (!fl_inserted) {
        add(path, "duplicate-family-level",
            "family \"" + tmpl.scenario_family + "\" already has a level " +
                std::to_string(tmpl.level) + " template at " +
                index_path("templates", fl_it->second));
      }
    }
    if (tmpl.xfactor1_id == tmpl.xfactor2_id) {
      add(path, "identical-xfactor-refs",
          "template \"" + tmpl.id + "\" uses xfactor \"" + tmpl.xfactor1_id +
              "\" on both sides");
    }
    const XFactorEntry* x1 = lexicon.find_xfactor(tmpl.xfactor1_id);
    const XFactorEntry* x2 = lexicon.find_xfactor(tmpl.xfactor2_id);
    if (x1 == nullptr) {
      add(path + ".xfactor1_id", "unresolved-xfactor-ref",
          "template \"" + tmpl.id + "\" references unknown xfactor \"" +
              tmpl.xfactor1_id + "\"");
    }
    if (x2 == nullptr) {
      add(path + ".xfactor2_id", "unresolved-xfactor-ref",
          "template \"" + tmpl.id + "\" references unknown xfactor \"" +
              tmpl.xfactor2_id + "\"");
    }
    if (x1 != nullptr && x2 != nullptr && x1 != x2) {
      std::set<std::string> pool1;
      for (const auto& s : x1->draw_pool()) pool1.insert(normalize_surface(s));
      for (const auto& s : x2->draw_pool()) {
        if (pool1.count(normalize_surface(s))) {
          add(path, "overlapping-xfactor-pools",
              "template \"" + tmpl.id + "\": surface form \"" + normalize_surface(s) +
                  "\" appears in both xfactor pools");
        }
      }
    }
    if (tmpl.query.empty()) {
      add(path + ".query", "empty-query", "query must be non-empty");
    }
  }

  return report;
}

Lexicon filter_by_context(const Lexicon& lexicon, std::string_view context) {
  bool tag_exists = std::any_of(
      lexicon.xfactors.begin(), lexicon.xfactors.end(), [&](const XFactorEntry& e) {
        return std::find(e.contexts.begin(), e.contexts.end(), context) != e.contexts.end();
      });
  if (!tag_exists) {
    throw UnknownContextError(std::string(context));
  }

  Lexicon result;
  result.metadata = lexicon.metadata;

  std::set<std::string> kept_ids;
  std::set<std::string> kept_xfactor_categories;
  for (const auto& entry : lexicon.xfactors) {
    if (std::find(entry.contexts.begin(), entry.contexts.end(), context) !=
        entry.contexts.end()) {
      result.xfactors.push_back(entry);
      kept_ids.insert(entry.id);
      kept_xfactor_categories.insert(entry.category);
    }
  }

  std::set<std::pair<std::string, std::string>> kept_pairs;
  for (const auto& tmpl : lexicon.templates) {
    if (kept_ids.count(tmpl.xfactor1_id) && kept_ids.count(tmpl.xfactor2_id)) {
      result.templates.push_back(tmpl);
      kept_pairs.insert({tmpl.category, tmpl.sub_category});
    }
  }

  // A taxonomy entry survives while something still points at it: a template
  // with its (category, sub_category), or a kept xfactor with its category.
  for (const auto& entry : lexicon.taxonomy) {
    if (kept_pairs.count({entry.category, entry.sub_category}) ||
        kept_xfactor_categories.count(entry.category)) {
      result.taxonomy.push_back(entry);
    }
  }

  return result;
}

Lexicon filter_by_category(const Lexicon& lexicon, const std::set<std::string>& categories) {
  if (categories.empty()) {
    throw std::invalid_argument("filter_by_category: categories must be non-empty");
  }
  std::set<std::string> known;
  for (const auto& entry : lexicon.taxonomy) known.insert(entry.category);
  for (const auto& name : categories) {
    if (!known.count(name)) {
      throw UnknownCategoryError(name);
    }
  }

  Lexicon result;
  result.metadata = lexicon.metadata;

  std::set<std::string> referenced_ids;
  for (const auto& tmpl : lexicon.templates) {
    if (categories.count(tmpl.category)) {
      result.templates.push_back(tmpl);
      referenced_ids.insert(tmpl.xfactor1_id);
      referenced_ids.insert(tmpl.xfactor2_id);
    }
  }

  std::set<std::string> kept_xfactor_categories;
  for (const auto& entry : lexicon.xfactors) {
    if (referenced_ids.count(entry.id)) {
      result.xfactors.push_back(entry);
      kept_xfactor_categories.insert(entry.category);
    }
  }

  for (const auto& entry : lexicon.taxonomy) {
    if (categories.count(entry.category) || kept_xfactor_categories.count(entry.category)) {
      result.taxonomy.push_back(entry);
    }
  }

  return result;
}

std::uint64_t enumerate_probe_space(const StemTemplate& tmpl, const Lexicon& lexicon) {
  const XFactorEntry* x1 = lexicon.find_xfactor(tmpl.xfactor1_id);
  const XFactorEntry* x2 = lexicon.find_xfactor(tmpl.xfactor2_id);
  if (x1 == nullptr || x2 == nullptr) {
    throw Error("enumerate_probe_space: template \"" + tmpl.id +
                "\" has unresolved xfactor references");
  }
  return static_cast<std::uint64_t>(1 + x1->synonyms.size()) *
         static_cast<std::uint64_t>(1 + x2->synonyms.size());
}

}  // namespace biasprobe
