#include "biasprobe/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "json.hpp"

namespace biasprobe {
namespace {

using nlohmann::json;

std::string format_float(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

json optional_number(const std::optional<double>& value) {
  if (!value) return nullptr;
  return *value;
}

std::string csv_escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Minimal RFC 4180 reader; handles quoted fields with embedded separators.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&]() {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        ++i;
        break;
      case ',':
        end_field();
        field_started = true;  // a separator implies a following field
        ++i;
        break;
      case '\r':
        ++i;
        break;
      case '\n':
        end_row();
        ++i;
        break;
      default:
        field.push_back(c);
        field_started = true;
        ++i;
        break;
    }
  }
  if (field_started || !row.empty()) end_row();
  if (in_quotes) throw Error("traces csv: unterminated quoted field");
  return rows;
}

const char* kTracesCsvHeader =
    "scenario_family,level,draw_index,prompt,x1_surface,x2_surface,verdict,rationale_code";

int parse_int_field(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(std::string("traces csv: bad ") + what + " value \"" + text + "\"");
  }
}

json run_to_json(const RunInfo& run) {
  json out;
  out["lexicon_name"] = run.lexicon_name;
  out["lexicon_version"] = run.lexicon_version;
  out["model"] = run.model;
  out["master_seed"] = run.master_seed;
  out["samples_per_level"] = run.samples_per_level;
  out["article_mode"] = run.article_mode;
  out["context"] = run.context ? json(*run.context) : json(nullptr);
  out["categories"] = run.categories ? json(*run.categories) : json(nullptr);
  return out;
}

json stats_to_json(const CategoryStats& stats) {
  json out;
  out["category"] = stats.category;
  out["sub_category"] = stats.sub_category;
  out["probes_total"] = stats.probes_total;
  out["biased_x1"] = stats.biased_x1;
  out["biased_x2"] = stats.biased_x2;
  out["neutral"] = stats.neutral;
  out["refusal"] = stats.refusal;
  out["inconclusive"] = stats.inconclusive;
  out["scenarios_total"] = stats.scenarios_total;
  out["scenarios_failed"] = stats.scenarios_failed;
  out["scenarios_passed"] = stats.scenarios_passed;
  out["scenarios_inconclusive"] = stats.scenarios_inconclusive;
  out["mean_failure_level"] = optional_number(stats.mean_failure_level);
  out["bias_rate"] = optional_number(stats.bias_rate);
  out["preference_asymmetry"] = optional_number(stats.preference_asymmetry);
  return out;
}

json totals_to_json(const ReportTotals& totals) {
  json out;
  out["probes_total"] = totals.probes_total;
  out["biased_x1"] = totals.biased_x1;
  out["biased_x2"] = totals.biased_x2;
  out["neutral"] = totals.neutral;
  out["refusal"] = totals.refusal;
  out["inconclusive"] = totals.inconclusive;
  out["transport_errors"] = totals.transport_errors;
  out["scenarios_total"] = totals.scenarios_total;
  out["scenarios_failed"] = totals.scenarios_failed;
  out["scenarios_passed"] = totals.scenarios_passed;
  out["scenarios_inconclusive"] = totals.scenarios_inconclusive;
  return out;
}

json trace_to_json(const TraceRecord& trace) {
  json out;
  out["template_id"] = trace.template_id;
  out["level"] = trace.level;
  out["draw_index"] = trace.draw_index;
  out["stream_seed"] = trace.stream_seed;
  out["x1_surface"] = trace.x1_surface;
  out["x2_surface"] = trace.x2_surface;
  out["prompt"] = trace.prompt;
  out["response"] = trace.response;
  out["verdict"] = std::string(to_string(trace.verdict));
  out["rationale_code"] = trace.rationale_code;
  out["matched_terms"] = trace.matched_terms;
  return out;
}

json session_to_json(const SessionRecord& session, bool include_traces) {
  json out;
  out["scenario_family"] = session.scenario_family;
  out["status"] = std::string(to_string(session.status.kind));
  if (session.status.kind == SessionStatus::Kind::FailedAtLevel ||
      session.status.kind == SessionStatus::Kind::InconclusiveAtLevel) {
    out["status_level"] = session.status.level;
  } else {
    out["status_level"] = nullptr;
  }
  if (include_traces) {
    out["trace"] = json::array();
    for (const auto& trace : session.trace) {
      out["trace"].push_back(trace_to_json(trace));
    }
  }
  return out;
}

std::optional<double> json_optional_number(const json& value, const char* what) {
  if (value.is_null()) return std::nullopt;
  if (!value.is_number()) throw Error(std::string("report json: ") + what + " must be a number or null");
  return value.get<double>();
}

template <typename T>
T get_field(const json& obj, const char* key) {
  if (!obj.contains(key)) {
    throw Error(std::string("report json: missing key \"") + key + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("report json: bad value for \"") + key + "\"");
  }
}

}  // namespace

double round_to_6_significant(double value) {
  return std::strtod(format_float(value).c_str(), nullptr);
}

std::vector<CategoryStats> compute_metrics(const std::vector<SessionState>& sessions,
                                           const Lexicon& lexicon) {
  for (const auto& session : sessions) {
    if (!session.status.terminal()) {
      throw NonTerminalSessionError("compute_metrics: session \"" +
                                    session.scenario_family + "\" is still running");
    }
  }

  std::map<std::string, const StemTemplate*> templates_by_id;
  for (const auto& tmpl : lexicon.templates) templates_by_id.emplace(tmpl.id, &tmpl);

  auto group_of = [&](const std::string& template_id)
      -> std::pair<std::string, std::string> {
    auto it = templates_by_id.find(template_id);
    if (it == templates_by_id.end()) {
      throw Error("compute_metrics: trace references unknown template \"" + template_id +
                  "\"");
    }
    return {it->second->category, it->second->sub_category};
  };

  std::map<std::pair<std::string, std::string>, CategoryStats> groups;
  auto group_stats = [&](const std::pair<std::string, std::string>& key) -> CategoryStats& {
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      it->second.category = key.first;
      it->second.sub_category = key.second;
    }
    return it->second;
  };

  std::map<std::pair<std::string, std::string>, std::vector<int>> failure_levels;

  for (const auto& session : sessions) {
    for (const auto& entry : session.trace) {
      CategoryStats& stats = group_stats(group_of(entry.probe.template_id));
      stats.probes_total += 1;
      switch (entry.verdict.kind) {
        case VerdictKind::BiasedTowardX1: stats.biased_x1 += 1; break;
        case VerdictKind::BiasedTowardX2: stats.biased_x2 += 1; break;
        case VerdictKind::Neutral: stats.neutral += 1; break;
        case VerdictKind::Refusal: stats.refusal += 1; break;
        case VerdictKind::Inconclusive: stats.inconclusive += 1; break;
      }
    }

    // The session itself counts toward the group of its entry-level template.
    if (session.available_levels.empty()) {
      throw Error("compute_metrics: session \"" + session.scenario_family +
                  "\" has no available levels");
    }
    const StemTemplate* first_template =
        lexicon.find_template(session.scenario_family, session.available_levels.front());
    if (first_template == nullptr) {
      throw Error("compute_metrics: no template for family \"" + session.scenario_family +
                  "\" level " + std::to_string(session.available_levels.front()));
    }
    auto key = std::make_pair(first_template->category, first_template->sub_category);
    CategoryStats& stats = group_stats(key);
    stats.scenarios_total += 1;
    switch (session.status.kind) {
      case SessionStatus::Kind::FailedAtLevel:
        stats.scenarios_failed += 1;
        failure_levels[key].push_back(session.status.level);
        break;
      case SessionStatus::Kind::PassedAllLevels:
        stats.scenarios_passed += 1;
        break;
      case SessionStatus::Kind::InconclusiveAtLevel:
        stats.scenarios_inconclusive += 1;
        break;
      case SessionStatus::Kind::Running:
        break;  // unreachable, checked above
    }
  }

  std::vector<CategoryStats> result;
  result.reserve(groups.size());
  for (auto& [key, stats] : groups) {
    if (stats.probes_total == 0) continue;  // no empty rows
    int biased = stats.biased_x1 + stats.biased_x2;
    if (biased + stats.neutral > 0) {
      stats.bias_rate = round_to_6_significant(
          static_cast<double>(biased) / static_cast<double>(biased + stats.neutral));
    }
    if (biased > 0) {
      stats.preference_asymmetry = round_to_6_significant(
          static_cast<double>(stats.biased_x1 - stats.biased_x2) /
          static_cast<double>(biased));
    }
    auto levels_it = failure_levels.find(key);
    if (levels_it != failure_levels.end() && !levels_it->second.empty()) {
      double sum = 0;
      for (int level : levels_it->second) sum += level;
      stats.mean_failure_level =
          round_to_6_significant(sum / static_cast<double>(levels_it->second.size()));
    }
    result.push_back(std::move(stats));
  }
  return result;
}

ReportTotals compute_totals(const std::vector<SessionState>& sessions) {
  ReportTotals totals;
  for (const auto& session : sessions) {
    for (const auto& entry : session.trace) {
      totals.probes_total += 1;
      switch (entry.verdict.kind) {
        case VerdictKind::BiasedTowardX1: totals.biased_x1 += 1; break;
        case VerdictKind::BiasedTowardX2: totals.biased_x2 += 1; break;
        case VerdictKind::Neutral: totals.neutral += 1; break;
        case VerdictKind::Refusal: totals.refusal += 1; break;
        case VerdictKind::Inconclusive: totals.inconclusive += 1; break;
      }
      if (entry.verdict.rationale_code == "transport-error") {
        totals.transport_errors += 1;
      }
    }
    totals.scenarios_total += 1;
    switch (session.status.kind) {
      case SessionStatus::Kind::FailedAtLevel: totals.scenarios_failed += 1; break;
      case SessionStatus::Kind::PassedAllLevels: totals.scenarios_passed += 1; break;
      case SessionStatus::Kind::InconclusiveAtLevel:
        totals.scenarios_inconclusive += 1;
        break;
      case SessionStatus::Kind::Running: break;
    }
  }
  return totals;
}

ReportDocument make_report_document(const std::vector<CategoryStats>& stats,
                                    const std::vector<SessionState>& sessions,
                                    const RunInfo& run, bool include_traces) {
  ReportDocument doc;
  doc.run = run;
  doc.categories = stats;
  doc.totals = compute_totals(sessions);
  doc.has_traces = include_traces;

  std::vector<const SessionState*> ordered;
  ordered.reserve(sessions.size());
  for (const auto& session : sessions) ordered.push_back(&session);
  std::sort(ordered.begin(), ordered.end(), [](const SessionState* a, const SessionState* b) {
    return a->scenario_family < b->scenario_family;
  });

  for (const SessionState* session : ordered) {
    SessionRecord record;
    record.scenario_family = session->scenario_family;
    record.status = session->status;
    if (include_traces) {
      record.trace.reserve(session->trace.size());
      for (const auto& entry : session->trace) {
        TraceRecord trace;
        trace.template_id = entry.probe.template_id;
        trace.level = entry.probe.level;
        trace.draw_index = entry.probe.draw_index;
        trace.stream_seed = entry.probe.stream_seed;
        trace.x1_surface = entry.probe.x1_surface;
        trace.x2_surface = entry.probe.x2_surface;
        trace.prompt = entry.probe.prompt;
        trace.response = entry.response;
        trace.verdict = entry.verdict.kind;
        trace.rationale_code = entry.verdict.rationale_code;
        trace.matched_terms = entry.verdict.matched_terms;
        record.trace.push_back(std::move(trace));
      }
    }
    doc.sessions.push_back(std::move(record));
  }
  return doc;
}

std::string render_json(const ReportDocument& doc) {
  json root;
  root["run"] = run_to_json(doc.run);
  root["totals"] = totals_to_json(doc.totals);
  root["categories"] = json::array();
  for (const auto& stats : doc.categories) {
    root["categories"].push_back(stats_to_json(stats));
  }
  root["sessions"] = json::array();
  for (const auto& session : doc.sessions) {
    root["sessions"].push_back(session_to_json(session, doc.has_traces));
  }
  return root.dump(2) + "\n";
}

std::string render_markdown(const ReportDocument& doc) {
  static const char* kNullCell = "–";
  std::ostringstream out;
  out << "# Bias probe report\n\n";
  out << "- Lexicon: " << doc.run.lexicon_name << " " << doc.run.lexicon_version << "\n";
  out << "- Model: " << doc.run.model << "\n";
  out << "- Master seed: " << doc.run.master_seed << "\n";
  out << "- Samples per level: " << doc.run.samples_per_level << "\n";
  out << "- Article mode: " << doc.run.article_mode << "\n";
  out << "- Context filter: " << (doc.run.context ? *doc.run.context : kNullCell) << "\n";
  out << "- Category filter: ";
  if (doc.run.categories) {
    for (std::size_t i = 0; i < doc.run.categories->size(); ++i) {
      if (i > 0) out << ", ";
      out << (*doc.run.categories)[i];
    }
  } else {
    out << kNullCell;
  }
  out << "\n\n";

  const ReportTotals& totals = doc.totals;
  out << "## Totals\n\n";
  out << "- Probes: " << totals.probes_total << " (toward factor 1: " << totals.biased_x1
      << ", toward factor 2: " << totals.biased_x2 << ", neutral: " << totals.neutral
      << ", refusal: " << totals.refusal << ", inconclusive: " << totals.inconclusive
      << ")\n";
  out << "- Scenarios: " << totals.scenarios_total << " (failed: " << totals.scenarios_failed
      << ", passed: " << totals.scenarios_passed
      << ", inconclusive: " << totals.scenarios_inconclusive << ")\n";
  out << "- Transport errors: " << totals.transport_errors << "\n\n";

  out << "## Per category\n\n";
  out << "| Category | Sub-category | Probes | Toward X1 | Toward X2 | Neutral | Refusal "
         "| Inconclusive | Bias rate | Asymmetry | Mean failure level | Scenarios "
         "(failed/passed/inconclusive) |\n";
  out << "| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |\n";
  auto cell = [&](const std::optional<double>& value) {
    return value ? format_float(*value) : std::string(kNullCell);
  };
  for (const auto& stats : doc.categories) {
    out << "| " << stats.category << " | " << stats.sub_category << " | "
        << stats.probes_total << " | " << stats.biased_x1 << " | " << stats.biased_x2
        << " | " << stats.neutral << " | " << stats.refusal << " | " << stats.inconclusive
        << " | " << cell(stats.bias_rate) << " | " << cell(stats.preference_asymmetry)
        << " | " << cell(stats.mean_failure_level) << " | " << stats.scenarios_total
        << " (" << stats.scenarios_failed << "/" << stats.scenarios_passed << "/"
        << stats.scenarios_inconclusive << ") |\n";
  }
  out << "\n";
  out << "Bias rate counts only biased and neutral probes; refusals and inconclusive "
         "probes carry no preference signal and are excluded from its denominator.\n";
  return out.str();
}

std::string render_traces_csv(const ReportDocument& doc) {
  std::ostringstream out;
  out << kTracesCsvHeader << "\n";
  for (const auto& session : doc.sessions) {
    for (const auto& trace : session.trace) {
      out << csv_escape(session.scenario_family) << "," << trace.level << ","
          << trace.draw_index << "," << csv_escape(trace.prompt) << ","
          << csv_escape(trace.x1_surface) << "," << csv_escape(trace.x2_surface) << ","
          << to_string(trace.verdict) << "," << csv_escape(trace.rationale_code) << "\n";
    }
  }
  return out.str();
}

std::string render_stats_csv(const std::vector<CategoryStats>& stats) {
  std::ostringstream out;
  out << "category,sub_category,probes_total,biased_x1,biased_x2,neutral,refusal,"
         "inconclusive,scenarios_total,scenarios_failed,scenarios_passed,"
         "scenarios_inconclusive,mean_failure_level,bias_rate,preference_asymmetry\n";
  auto cell = [&](const std::optional<double>& value) {
    return value ? format_float(*value) : std::string();
  };
  for (const auto& row : stats) {
    out << csv_escape(row.category) << "," << csv_escape(row.sub_category) << ","
        << row.probes_total << "," << row.biased_x1 << "," << row.biased_x2 << ","
        << row.neutral << "," << row.refusal << "," << row.inconclusive << ","
        << row.scenarios_total << "," << row.scenarios_failed << "," << row.scenarios_passed
        << "," << row.scenarios_inconclusive << "," << cell(row.mean_failure_level) << ","
        << cell(row.bias_rate) << "," << cell(row.preference_asymmetry) << "\n";
  }
  return out.str();
}

std::string export_report(const std::vector<CategoryStats>& stats,
                          const std::vector<SessionState>& sessions, ReportFormat format,
                          bool include_traces, const RunInfo& run) {
  ReportDocument doc = make_report_document(stats, sessions, run, include_traces);
  switch (format) {
    case ReportFormat::Json: return render_json(doc);
    case ReportFormat::Markdown: return render_markdown(doc);
    case ReportFormat::Csv:
      return include_traces ? render_traces_csv(doc) : render_stats_csv(doc.categories);
  }
  throw Error("export_report: unknown format");
}

namespace {

ReportDocument decode_report_document(const json& root) {
  ReportDocument doc;
  const json& run = root.at("run");
  doc.run.lexicon_name = get_field<std::string>(run, "lexicon_name");
  doc.run.lexicon_version = get_field<std::string>(run, "lexicon_version");
  doc.run.model = get_field<std::string>(run, "model");
  doc.run.master_seed = get_field<std::uint64_t>(run, "master_seed");
  doc.run.samples_per_level = get_field<int>(run, "samples_per_level");
  doc.run.article_mode = get_field<std::string>(run, "article_mode");
  if (run.contains("context") && !run.at("context").is_null()) {
    doc.run.context = run.at("context").get<std::string>();
  }
  if (run.contains("categories") && !run.at("categories").is_null()) {
    doc.run.categories = run.at("categories").get<std::vector<std::string>>();
  }

  const json& totals = root.at("totals");
  doc.totals.probes_total = get_field<int>(totals, "probes_total");
  doc.totals.biased_x1 = get_field<int>(totals, "biased_x1");
  doc.totals.biased_x2 = get_field<int>(totals, "biased_x2");
  doc.totals.neutral = get_field<int>(totals, "neutral");
  doc.totals.refusal = get_field<int>(totals, "refusal");
  doc.totals.inconclusive = get_field<int>(totals, "inconclusive");
  doc.totals.transport_errors = get_field<int>(totals, "transport_errors");
  doc.totals.scenarios_total = get_field<int>(totals, "scenarios_total");
  doc.totals.scenarios_failed = get_field<int>(totals, "scenarios_failed");
  doc.totals.scenarios_passed = get_field<int>(totals, "scenarios_passed");
  doc.totals.scenarios_inconclusive = get_field<int>(totals, "scenarios_inconclusive");

  for (const json& entry : root.at("categories")) {
    CategoryStats stats;
    stats.category = get_field<std::string>(entry, "category");
    stats.sub_category = get_field<std::string>(entry, "sub_category");
    stats.probes_total = get_field<int>(entry, "probes_total");
    stats.biased_x1 = get_field<int>(entry, "biased_x1");
    stats.biased_x2 = get_field<int>(entry, "biased_x2");
    stats.neutral = get_field<int>(entry, "neutral");
    stats.refusal = get_field<int>(entry, "refusal");
    stats.inconclusive = get_field<int>(entry, "inconclusive");
    stats.scenarios_total = get_field<int>(entry, "scenarios_total");
    stats.scenarios_failed = get_field<int>(entry, "scenarios_failed");
    stats.scenarios_passed = get_field<int>(entry, "scenarios_passed");
    stats.scenarios_inconclusive = get_field<int>(entry, "scenarios_inconclusive");
    stats.mean_failure_level =
        json_optional_number(entry.at("mean_failure_level"), "mean_failure_level");
    stats.bias_rate = json_optional_number(entry.at("bias_rate"), "bias_rate");
    stats.preference_asymmetry =
        json_optional_number(entry.at("preference_asymmetry"), "preference_asymmetry");
    doc.categories.push_back(std::move(stats));
  }

  for (const json& entry : root.at("sessions")) {
    SessionRecord record;
    record.scenario_family = get_field<std::string>(entry, "scenario_family");
    record.status.kind =
        session_status_kind_from_string(get_field<std::string>(entry, "status"));
    if (entry.contains("status_level") && !entry.at("status_level").is_null()) {
      record.status.level = entry.at("status_level").get<int>();
    }
    if (entry.contains("trace")) {
      doc.has_traces = true;
      for (const json& item : entry.at("trace")) {
        TraceRecord trace;
        trace.template_id = get_field<std::string>(item, "template_id");
        trace.level = get_field<int>(item, "level");
        trace.draw_index = get_field<std::uint64_t>(item, "draw_index");
        trace.stream_seed = get_field<std::uint64_t>(item, "stream_seed");
        trace.x1_surface = get_field<std::string>(item, "x1_surface");
        trace.x2_surface = get_field<std::string>(item, "x2_surface");
        trace.prompt = get_field<std::string>(item, "prompt");
        trace.response = get_field<std::string>(item, "response");
        trace.verdict = verdict_kind_from_string(get_field<std::string>(item, "verdict"));
        trace.rationale_code = get_field<std::string>(item, "rationale_code");
        trace.matched_terms = get_field<std::vector<std::string>>(item, "matched_terms");
        record.trace.push_back(std::move(trace));
      }
    }
    doc.sessions.push_back(std::move(record));
  }
  return doc;
}

}  // namespace

ReportDocument parse_report_document(std::string_view json_bytes) {
  json root;
  try {
    root = json::parse(json_bytes);
  } catch (const json::parse_error& e) {
    throw Error(std::string("report json: ") + e.what());
  }
  if (!root.is_object() || !root.contains("run") || !root.contains("categories") ||
      !root.contains("totals") || !root.contains("sessions")) {
    throw Error("report json: not a report document");
  }
  try {
    return decode_report_document(root);
  } catch (const json::exception& e) {
    throw Error(std::string("report json: ") + e.what());
  }
}

std::vector<SessionRecord> parse_traces_csv(std::string_view csv_bytes) {
  std::vector<std::vector<std::string>> rows = parse_csv(csv_bytes);
  if (rows.empty()) throw Error("traces csv: empty input");
  const std::vector<std::string> expected_header = {
      "scenario_family", "level",      "draw_index", "prompt",
      "x1_surface",      "x2_surface", "verdict",    "rationale_code"};
  if (rows.front() != expected_header) {
    throw Error("traces csv: unrecognized header");
  }

  // Rows of one family are contiguous and level-ordered in run output; group
  // them preserving encounter order.
  std::map<std::string, SessionRecord> sessions;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != expected_header.size()) {
      throw Error("traces csv: row " + std::to_string(i) + " has " +
                  std::to_string(row.size()) + " fields");
    }
    TraceRecord trace;
    trace.level = parse_int_field(row[1], "level");
    trace.draw_index = static_cast<std::uint64_t>(parse_int_field(row[2], "draw_index"));
    trace.prompt = row[3];
    trace.x1_surface = row[4];
    trace.x2_surface = row[5];
    trace.verdict = verdict_kind_from_string(row[6]);
    trace.rationale_code = row[7];
    auto [it, inserted] = sessions.try_emplace(row[0]);
    if (inserted) it->second.scenario_family = row[0];
    it->second.trace.push_back(std::move(trace));
  }

  std::vector<SessionRecord> result;
  result.reserve(sessions.size());
  for (auto& [family, record] : sessions) {
    // Re-derive the terminal status from the last level's verdicts.
    const int last_level = record.trace.back().level;
    bool any_biased = false;
    bool any_neutral = false;
    for (const auto& trace : record.trace) {
      if (trace.level != last_level) continue;
      if (trace.verdict == VerdictKind::BiasedTowardX1 ||
          trace.verdict == VerdictKind::BiasedTowardX2) {
        any_biased = true;
      }
      if (trace.verdict == VerdictKind::Neutral) any_neutral = true;
    }
    if (any_biased) {
      record.status = SessionStatus::failed_at(last_level);
    } else if (any_neutral) {
      record.status = SessionStatus::passed();
    } else {
      record.status = SessionStatus::inconclusive_at(last_level);
    }
    result.push_back(std::move(record));
  }
  return result;
}

std::vector<SessionState> sessions_from_records(const std::vector<SessionRecord>& records,
                                                const Lexicon& lexicon) {
  std::vector<SessionState> sessions;
  sessions.reserve(records.size());
  for (const auto& record : records) {
    SessionState state;
    state.scenario_family = record.scenario_family;
    state.status = record.status;
    std::set<int> levels;
    for (const auto& trace : record.trace) {
      const StemTemplate* tmpl = lexicon.find_template(record.scenario_family, trace.level);
      if (tmpl == nullptr) {
        throw Error("traces csv: no template for family \"" + record.scenario_family +
                    "\" level " + std::to_string(trace.level) + " in this lexicon");
      }
      levels.insert(trace.level);
      TraceEntry entry;
      entry.probe.template_id =
          trace.template_id.empty() ? tmpl->id : trace.template_id;
      entry.probe.scenario_family = record.scenario_family;
      entry.probe.level = trace.level;
      entry.probe.x1_surface = trace.x1_surface;
      entry.probe.x2_surface = trace.x2_surface;
      entry.probe.prompt = trace.prompt;
      entry.probe.draw_index = trace.draw_index;
      entry.probe.stream_seed = trace.stream_seed;
      entry.response = trace.response;
      entry.verdict.kind = trace.verdict;
      entry.verdict.rationale_code = trace.rationale_code;
      entry.verdict.matched_terms = trace.matched_terms;
      state.trace.push_back(std::move(entry));
    }
    state.available_levels.assign(levels.begin(), levels.end());
    state.current_level =
        state.available_levels.empty() ? 0 : state.available_levels.back();
    sessions.push_back(std::move(state));
  }
  return sessions;
}

}  // namespace biasprobe
