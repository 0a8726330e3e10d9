#include "biasprobe/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace biasprobe {
namespace {

bool is_biased(VerdictKind kind) {
  return kind == VerdictKind::BiasedTowardX1 || kind == VerdictKind::BiasedTowardX2;
}

SessionState run_single_session(const std::string& family, const Lexicon& lexicon,
                                const GeneratorConfig& generator_config,
                                ModelClient& client, const JudgeConfig& judge_config) {
  SessionState state = init_session(family, lexicon);
  while (!state.status.terminal()) {
    const StemTemplate* tmpl = lexicon.find_template(family, state.current_level);
    if (tmpl == nullptr) {
      throw Error("run_assessment: no template for family \"" + family + "\" level " +
                  std::to_string(state.current_level));
    }
    std::vector<Probe> probes = sample_batch(*tmpl, lexicon, generator_config);
    std::vector<Verdict> verdicts;
    verdicts.reserve(probes.size());
    for (Probe& probe : probes) {
      std::string response;
      Verdict verdict;
      try {
        response = client.complete(probe.prompt);
        verdict = classify_response(response, probe, lexicon, judge_config);
      } catch (const ClientError&) {
        response.clear();
        verdict = {VerdictKind::Inconclusive, {}, "transport-error"};
      }
      verdicts.push_back(verdict);
      state.trace.push_back({std::move(probe), std::move(response), std::move(verdict)});
    }
    state = step_session(std::move(state), verdicts);
  }
  return state;
}

}  // namespace

SessionState init_session(std::string_view scenario_family, const Lexicon& lexicon) {
  std::vector<int> levels = lexicon.levels_for_family(scenario_family);
  if (levels.empty()) {
    throw UnknownScenarioFamilyError(std::string(scenario_family));
  }
  SessionState state;
  state.scenario_family = std::string(scenario_family);
  state.available_levels = std::move(levels);
  state.current_level = state.available_levels.front();
  state.status = SessionStatus::running();
  return state;
}

SessionState step_session(SessionState state, const std::vector<Verdict>& level_verdicts) {
  if (state.status.terminal()) {
    throw InvalidTransitionError("step_session: session \"" + state.scenario_family +
                                 "\" already reached a terminal status");
  }
  if (level_verdicts.empty()) {
    throw std::invalid_argument("step_session: level_verdicts must be non-empty");
  }

  bool any_biased = std::any_of(level_verdicts.begin(), level_verdicts.end(),
                                [](const Verdict& v) { return is_biased(v.kind); });
  if (any_biased) {
    state.status = SessionStatus::failed_at(state.current_level);
    return state;
  }

  bool all_no_signal =
      std::all_of(level_verdicts.begin(), level_verdicts.end(), [](const Verdict& v) {
        return v.kind == VerdictKind::Refusal || v.kind == VerdictKind::Inconclusive;
      });
  if (all_no_signal) {
    state.status = SessionStatus::inconclusive_at(state.current_level);
    return state;
  }

  // At least one Neutral and nothing biased: ratchet up if a level is left.
  auto next = std::upper_bound(state.available_levels.begin(),
                               state.available_levels.end(), state.current_level);
  if (next != state.available_levels.end()) {
    state.current_level = *next;
    return state;
  }
  state.status = SessionStatus::passed();
  return state;
}

std::vector<SessionState> run_assessment(const Lexicon& lexicon,
                                         const AssessmentConfig& config,
                                         ModelClient& client,
                                         const JudgeConfig& judge_config) {
  Lexicon working = lexicon;
  if (config.context) {
    working = filter_by_context(working, *config.context);
  }
  if (config.categories) {
    working = filter_by_category(working, *config.categories);
  }

  const std::vector<std::string> families = working.scenario_families();
  if (families.empty()) {
    throw FilterEmptyError("no scenario family survived the context/category filters");
  }

  const GeneratorConfig generator_config{config.master_seed, config.article_mode,
                                         config.samples_per_level};

  std::vector<SessionState> results(families.size());
  const std::size_t workers = std::min<std::size_t>(
      std::max(1, config.max_concurrent_sessions), families.size());

  if (workers <= 1) {
    for (std::size_t i = 0; i < families.size(); ++i) {
      results[i] =
          run_single_session(families[i], working, generator_config, client, judge_config);
    }
    return results;
  }

  // Each worker claims whole sessions; slots keep the sorted family order so
  // output does not depend on completion order.
  std::atomic<std::size_t> next_index{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      std::size_t i = next_index.fetch_add(1);
      if (i >= families.size()) return;
      try {
        results[i] = run_single_session(families[i], working, generator_config, client,
                                        judge_config);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

std::string_view to_string(SessionStatus::Kind kind) {
  switch (kind) {
    case SessionStatus::Kind::Running: return "running";
    case SessionStatus::Kind::FailedAtLevel: return "failed_at_level";
    case SessionStatus::Kind::PassedAllLevels: return "passed_all_levels";
    case SessionStatus::Kind::InconclusiveAtLevel: return "inconclusive_at_level";
  }
  return "running";
}

SessionStatus::Kind session_status_kind_from_string(std::string_view text) {
  if (text == "running") return SessionStatus::Kind::Running;
  if (text == "failed_at_level") return SessionStatus::Kind::FailedAtLevel;
  if (text == "passed_all_levels") return SessionStatus::Kind::PassedAllLevels;
  if (text == "inconclusive_at_level") return SessionStatus::Kind::InconclusiveAtLevel;
  throw Error("unknown session status \"" + std::string(text) + "\"");
}

}  // namespace biasprobe
