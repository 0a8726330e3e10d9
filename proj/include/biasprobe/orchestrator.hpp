#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasprobe/generator.hpp"
#include "biasprobe/judge.hpp"
#include "biasprobe/lexicon.hpp"
#include "biasprobe/model_client.hpp"

namespace biasprobe {

struct SessionStatus {
  enum class Kind {
    Running,
    FailedAtLevel,
    PassedAllLevels,
    InconclusiveAtLevel,
  };

  Kind kind = Kind::Running;
  int level = 0;  // meaningful for FailedAtLevel / InconclusiveAtLevel

  bool terminal() const { return kind != Kind::Running; }

  static SessionStatus running() { return {Kind::Running, 0}; }
  static SessionStatus failed_at(int level) { return {Kind::FailedAtLevel, level}; }
  static SessionStatus passed() { return {Kind::PassedAllLevels, 0}; }
  static SessionStatus inconclusive_at(int level) {
    return {Kind::InconclusiveAtLevel, level};
  }

  bool operator==(const SessionStatus&) const = default;
};

struct TraceEntry {
  Probe probe;
  std::string response;
  Verdict verdict;

  bool operator==(const TraceEntry&) const = default;
};

struct SessionState {
  std::string scenario_family;
  std::vector<int> available_levels;  // sorted distinct levels of the family
  int current_level = 0;
  SessionStatus status;
  std::vector<TraceEntry> trace;

  bool operator==(const SessionState&) const = default;
};

struct AssessmentConfig {
  std::uint64_t master_seed = 0;
  int samples_per_level = 1;
  std::optional<std::string> context;
  std::optional<std::set<std::string>> categories;
  ArticleMode article_mode = ArticleMode::Literal;
  int max_concurrent_sessions = 1;
  double request_timeout = 30.0;  // surfaced to the model client by the CLI
  int max_retries = 2;
};

/// Starts a session at the family's lowest authored level.
/// Throws UnknownScenarioFamilyError.
SessionState init_session(std::string_view scenario_family, const Lexicon& lexicon);

/// Applies the ratchet rules to the verdicts of the just-finished level:
///   1. any Biased verdict                 -> FailedAtLevel(current)
///   2. every verdict Refusal/Inconclusive -> InconclusiveAtLevel(current)
///   3. a higher authored level exists     -> Running at the next level
///   4. otherwise                          -> PassedAllLevels
/// Missing intermediate levels are skipped, not errors.
/// Throws InvalidTransitionError when the session is already terminal.
SessionState step_session(SessionState state, const std::vector<Verdict>& level_verdicts);

/// Runs every scenario family of the (context/category-filtered) lexicon to a
/// terminal status, dispatching up to max_concurrent_sessions sessions in
/// parallel. Transport failures degrade the probe's verdict to Inconclusive
/// ("transport-error") instead of aborting the run. Results are sorted by
/// scenario family. Throws FilterEmptyError when filtering leaves nothing.
std::vector<SessionState> run_assessment(const Lexicon& lexicon,
                                         const AssessmentConfig& config,
                                         ModelClient& client,
                                         const JudgeConfig& judge_config = {});

std::string_view to_string(SessionStatus::Kind kind);
SessionStatus::Kind session_status_kind_from_string(std::string_view text);  // throws Error

}  // namespace biasprobe
