#include "biasprobe/reporting.hpp"

#include "doctest.h"
#include "fixtures.hpp"

using namespace biasprobe;

namespace {

Verdict verdict_of(VerdictKind kind) {
  Verdict verdict;
  verdict.kind = kind;
  if (kind == VerdictKind::BiasedTowardX1 || kind == VerdictKind::BiasedTowardX2) {
    verdict.matched_terms = {"term"};
    verdict.rationale_code = "single-factor-mention";
  } else {
    verdict.rationale_code = "neutral-cue";
  }
  return verdict;
}

TraceEntry entry_at(const Lexicon& lexicon, int level, std::uint64_t draw,
                    VerdictKind kind) {
  TraceEntry entry;
  entry.probe.template_id = lexicon.templates[0].id;
  entry.probe.scenario_family = lexicon.templates[0].scenario_family;
  entry.probe.level = level;
  entry.probe.x1_surface = "person with hearing impairment";
  entry.probe.x2_surface = "person with good hearing";
  entry.probe.prompt = "prompt " + std::to_string(draw);
  entry.probe.draw_index = draw;
  entry.probe.stream_seed = 99;
  entry.response = "response";
  entry.verdict = verdict_of(kind);
  return entry;
}

SessionState session_with(const Lexicon& lexicon, SessionStatus status,
                          const std::vector<VerdictKind>& kinds) {
  SessionState session;
  session.scenario_family = lexicon.templates[0].scenario_family;
  session.available_levels = {1};
  session.current_level = 1;
  session.status = status;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    session.trace.push_back(entry_at(lexicon, 1, i, kinds[i]));
  }
  return session;
}

}  // namespace

TEST_CASE("compute_metrics aggregates one all-neutral session") {
  Lexicon lexicon = testutil::minimal_lexicon();
  std::vector<SessionState> sessions = {
      session_with(lexicon, SessionStatus::passed(),
                   {VerdictKind::Neutral, VerdictKind::Neutral, VerdictKind::Neutral})};
  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].category == "Disability status");
  CHECK(stats[0].probes_total == 3);
  CHECK(stats[0].neutral == 3);
  CHECK(stats[0].bias_rate == 0.0);
  CHECK(!stats[0].preference_asymmetry.has_value());
  CHECK(!stats[0].mean_failure_level.has_value());
  CHECK(stats[0].scenarios_passed == 1);
  CHECK(stats[0].scenarios_total == 1);
}

TEST_CASE("compute_metrics applies the stated formulas") {
  Lexicon lexicon = testutil::minimal_lexicon();
  std::vector<SessionState> sessions = {session_with(
      lexicon, SessionStatus::failed_at(1),
      {VerdictKind::BiasedTowardX2, VerdictKind::BiasedTowardX2, VerdictKind::Neutral,
       VerdictKind::Refusal})};
  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].probes_total == 4);
  CHECK(stats[0].biased_x2 == 2);
  CHECK(stats[0].neutral == 1);
  CHECK(stats[0].refusal == 1);
  CHECK(*stats[0].bias_rate == doctest::Approx(0.666667));
  CHECK(*stats[0].preference_asymmetry == -1.0);
  CHECK(*stats[0].mean_failure_level == 1.0);
  CHECK(stats[0].scenarios_failed == 1);
}

TEST_CASE("compute_metrics rejects running sessions") {
  Lexicon lexicon = testutil::minimal_lexicon();
  SessionState running = session_with(lexicon, SessionStatus::running(), {});
  CHECK_THROWS_AS(compute_metrics({running}, lexicon), NonTerminalSessionError);
}

TEST_CASE("verdict counts conserve probe totals") {
  Lexicon lexicon = testutil::minimal_lexicon();
  std::vector<SessionState> sessions = {
      session_with(lexicon, SessionStatus::failed_at(1),
                   {VerdictKind::BiasedTowardX1, VerdictKind::Neutral,
                    VerdictKind::Refusal, VerdictKind::Inconclusive,
                    VerdictKind::BiasedTowardX2})};
  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);
  int probes = 0;
  for (const auto& group : stats) {
    CHECK(group.biased_x1 + group.biased_x2 + group.neutral + group.refusal +
              group.inconclusive ==
          group.probes_total);
    CHECK(group.scenarios_failed + group.scenarios_passed + group.scenarios_inconclusive ==
          group.scenarios_total);
    probes += group.probes_total;
  }
  CHECK(probes == 5);
}

TEST_CASE("json export is byte-deterministic") {
  Lexicon lexicon = testutil::minimal_lexicon();
  std::vector<SessionState> sessions = {session_with(
      lexicon, SessionStatus::failed_at(1),
      {VerdictKind::BiasedTowardX2, VerdictKind::BiasedTowardX2, VerdictKind::Neutral})};
  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);

  RunInfo run;
  run.lexicon_name = "fixture";
  run.lexicon_version = "0.1";
  std::string a = export_report(stats, sessions, ReportFormat::Json, true, run);
  std::string b = export_report(stats, sessions, ReportFormat::Json, true, run);
  CHECK(a == b);

  // floats carry at most six significant digits
  CHECK(a.find("\"bias_rate\": 0.666667") != std::string::npos);

  ReportDocument doc = parse_report_document(a);
  CHECK(render_json(doc) == a);  // parse/render round trip is stable
  CHECK(doc.categories == stats);
}

TEST_CASE("markdown renders nulls as en dashes") {
  Lexicon lexicon = testutil::minimal_lexicon();
  std::vector<SessionState> sessions = {
      session_with(lexicon, SessionStatus::passed(), {VerdictKind::Neutral})};
  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);
  REQUIRE(!stats[0].preference_asymmetry.has_value());

  std::string markdown = export_report(stats, sessions, ReportFormat::Markdown, false);
  CHECK(markdown.find("–") != std::string::npos);
  CHECK(markdown.find("| Disability status |") != std::string::npos);

  std::string json_text = export_report(stats, sessions, ReportFormat::Json, false);
  CHECK(json_text.find("\"preference_asymmetry\": null") != std::string::npos);
}

TEST_CASE("traces csv uses the fixed schema and RFC 4180 escaping") {
  Lexicon lexicon = testutil::minimal_lexicon();
  SessionState session = session_with(lexicon, SessionStatus::failed_at(1),
                                      {VerdictKind::BiasedTowardX2});
  session.trace[0].probe.prompt = "contains, a comma and \"quotes\"";
  std::vector<SessionState> sessions = {session};
  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);

  std::string csv = export_report(stats, sessions, ReportFormat::Csv, true);
  CHECK(csv.rfind("scenario_family,level,draw_index,prompt,x1_surface,x2_surface,verdict,"
                  "rationale_code\n",
                  0) == 0);
  CHECK(csv.find("\"contains, a comma and \"\"quotes\"\"\"") != std::string::npos);
  CHECK(csv.find("BiasedTowardX2") != std::string::npos);

  std::string stats_csv = export_report(stats, sessions, ReportFormat::Csv, false);
  CHECK(stats_csv.rfind("category,sub_category,", 0) == 0);
}

TEST_CASE("stats recomputed from the traces csv match the original") {
  Lexicon lexicon = testutil::minimal_lexicon();
  std::vector<SessionState> sessions = {session_with(
      lexicon, SessionStatus::failed_at(1),
      {VerdictKind::Neutral, VerdictKind::BiasedTowardX2, VerdictKind::Refusal})};
  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);

  std::string csv = export_report(stats, sessions, ReportFormat::Csv, true);
  std::vector<SessionRecord> records = parse_traces_csv(csv);
  std::vector<SessionState> rebuilt = sessions_from_records(records, lexicon);
  CHECK(compute_metrics(rebuilt, lexicon) == stats);
}

TEST_CASE("round_to_6_significant is idempotent") {
  for (double value : {2.0 / 3.0, 1.0, 0.1234567, 123456.789, 1e-7}) {
    double once = round_to_6_significant(value);
    CHECK(round_to_6_significant(once) == once);
  }
}
