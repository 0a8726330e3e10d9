#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasprobe/judge.hpp"
#include "biasprobe/lexicon.hpp"
#include "biasprobe/orchestrator.hpp"

namespace biasprobe {

/// Aggregated verdict and scenario counts for one (category, sub_category).
///
/// bias_rate = biased / (biased + neutral): refusals and inconclusive probes
/// carry no preference signal, so they stay out of the denominator.
/// preference_asymmetry = (x1 - x2) / (x1 + x2); positive favors XFactor1.
struct CategoryStats {
  std::string category;
  std::string sub_category;
  int probes_total = 0;
  int biased_x1 = 0;
  int biased_x2 = 0;
  int neutral = 0;
  int refusal = 0;
  int inconclusive = 0;
  int scenarios_total = 0;
  int scenarios_failed = 0;
  int scenarios_passed = 0;
  int scenarios_inconclusive = 0;
  std::optional<double> mean_failure_level;
  std::optional<double> bias_rate;
  std::optional<double> preference_asymmetry;

  bool operator==(const CategoryStats&) const = default;
};

struct ReportTotals {
  int probes_total = 0;
  int biased_x1 = 0;
  int biased_x2 = 0;
  int neutral = 0;
  int refusal = 0;
  int inconclusive = 0;
  int transport_errors = 0;
  int scenarios_total = 0;
  int scenarios_failed = 0;
  int scenarios_passed = 0;
  int scenarios_inconclusive = 0;

  bool operator==(const ReportTotals&) const = default;
};

/// Run parameters echoed into every report; all values are deterministic so
/// exports stay byte-stable.
struct RunInfo {
  std::string lexicon_name;
  std::string lexicon_version;
  std::string model = "mock";
  std::uint64_t master_seed = 0;
  int samples_per_level = 1;
  std::string article_mode = "literal";
  std::optional<std::string> context;
  std::optional<std::vector<std::string>> categories;

  bool operator==(const RunInfo&) const = default;
};

struct TraceRecord {
  std::string template_id;
  int level = 1;
  std::uint64_t draw_index = 0;
  std::uint64_t stream_seed = 0;
  std::string x1_surface;
  std::string x2_surface;
  std::string prompt;
  std::string response;
  VerdictKind verdict = VerdictKind::Inconclusive;
  std::string rationale_code;
  std::vector<std::string> matched_terms;

  bool operator==(const TraceRecord&) const = default;
};

struct SessionRecord {
  std::string scenario_family;
  SessionStatus status;
  std::vector<TraceRecord> trace;

  bool operator==(const SessionRecord&) const = default;
};

/// Everything a report carries; the JSON export is this structure verbatim.
struct ReportDocument {
  RunInfo run;
  std::vector<CategoryStats> categories;  // sorted by (category, sub_category)
  ReportTotals totals;
  std::vector<SessionRecord> sessions;  // sorted by scenario_family
  bool has_traces = false;

  bool operator==(const ReportDocument&) const = default;
};

enum class ReportFormat { Json, Markdown, Csv };

/// Rounds to at most 6 significant digits; applied to every derived float so
/// all export formats agree byte-for-byte.
double round_to_6_significant(double value);

/// Groups trace entries by the (category, sub_category) of their template and
/// aggregates verdict and scenario counts. Sessions are attributed to the
/// group of their lowest-level template. Output sorted by group; groups
/// without probes are omitted. Throws NonTerminalSessionError.
std::vector<CategoryStats> compute_metrics(const std::vector<SessionState>& sessions,
                                           const Lexicon& lexicon);

ReportTotals compute_totals(const std::vector<SessionState>& sessions);

ReportDocument make_report_document(const std::vector<CategoryStats>& stats,
                                    const std::vector<SessionState>& sessions,
                                    const RunInfo& run, bool include_traces);

/// Canonical JSON: UTF-8, lexicographically sorted keys, floats at 6
/// significant digits; byte-identical for identical inputs.
std::string render_json(const ReportDocument& doc);

/// Human summary: run parameters, totals, one table row per group. Null
/// metrics render as "–".
std::string render_markdown(const ReportDocument& doc);

/// One row per probe:
/// scenario_family,level,draw_index,prompt,x1_surface,x2_surface,verdict,rationale_code
std::string render_traces_csv(const ReportDocument& doc);

/// One row per CategoryStats; null metrics render as empty fields.
std::string render_stats_csv(const std::vector<CategoryStats>& stats);

/// Convenience wrapper over the renderers. For Csv, include_traces selects
/// the per-probe listing over the per-group table.
std::string export_report(const std::vector<CategoryStats>& stats,
                          const std::vector<SessionState>& sessions, ReportFormat format,
                          bool include_traces, const RunInfo& run = {});

/// Inverse of render_json. Throws Error / ParseError on unrecognized input.
ReportDocument parse_report_document(std::string_view json_bytes);

/// Parses a traces CSV back into session records (statuses re-derived from
/// the per-level verdicts). Responses, stream seeds and matched terms are not
/// part of the CSV, so the rebuilt records carry empty placeholders.
std::vector<SessionRecord> parse_traces_csv(std::string_view csv_bytes);

/// Lifts parsed session records into SessionStates against a lexicon (the
/// same one the run used), ready for compute_metrics.
std::vector<SessionState> sessions_from_records(const std::vector<SessionRecord>& records,
                                                const Lexicon& lexicon);

}  // namespace biasprobe
