#include "biasprobe/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "biasprobe/generator.hpp"
#include "biasprobe/judge.hpp"
#include "biasprobe/lexicon.hpp"
#include "biasprobe/model_client.hpp"
#include "biasprobe/orchestrator.hpp"
#include "biasprobe/reporting.hpp"

namespace biasprobe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitEnvironment = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Interrupted runs must never leave half-written reports behind.
void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("failed writing file: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<std::string> split_comma_list(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string part = text.substr(start, end - start);
    // trim surrounding spaces
    while (!part.empty() && part.front() == ' ') part.erase(part.begin());
    while (!part.empty() && part.back() == ' ') part.pop_back();
    if (!part.empty()) parts.push_back(std::move(part));
    start = end + 1;
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Run configuration file
// ---------------------------------------------------------------------------

struct RunSettings {
  std::string lexicon_path;
  std::optional<std::string> context;
  std::optional<std::set<std::string>> categories;
  std::uint64_t seed = 0;  // default pinned so plain runs are reproducible
  int samples_per_level = 1;
  ArticleMode article_mode = ArticleMode::Literal;
  int concurrency = 1;
  std::string out_dir = "reports";
  JudgeConfig judge;
  ModelClientConfig model;
  bool endpoint_configured = false;
};

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) { known = true; break; }
    }
    if (!known) throw Error("run config: unknown key \"" + where + item.key() + "\"");
  }
}

template <typename T>
void read_if_present(const json& obj, const char* key, T& target) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("run config: bad value for \"") + key + "\"");
  }
}

RunSettings load_run_config(const std::string& path) {
  json root;
  try {
    root = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error("run config: " + std::string(e.what()));
  }
  if (!root.is_object()) throw Error("run config: expected a JSON object");
  reject_unknown(root,
                 {"lexicon", "context", "categories", "seed", "samples_per_level",
                  "articles", "concurrency", "out", "judge", "model"},
                 "");

  RunSettings settings;
  read_if_present(root, "lexicon", settings.lexicon_path);
  if (root.contains("context") && !root.at("context").is_null()) {
    settings.context = root.at("context").get<std::string>();
  }
  if (root.contains("categories") && !root.at("categories").is_null()) {
    auto names = root.at("categories").get<std::vector<std::string>>();
    settings.categories = std::set<std::string>(names.begin(), names.end());
  }
  read_if_present(root, "seed", settings.seed);
  read_if_present(root, "samples_per_level", settings.samples_per_level);
  if (root.contains("articles")) {
    settings.article_mode = article_mode_from_string(root.at("articles").get<std::string>());
  }
  read_if_present(root, "concurrency", settings.concurrency);
  read_if_present(root, "out", settings.out_dir);

  if (root.contains("judge")) {
    const json& judge = root.at("judge");
    if (!judge.is_object()) throw Error("run config: \"judge\" must be an object");
    reject_unknown(judge, {"neutral_cues", "refusal_cues"}, "judge.");
    read_if_present(judge, "neutral_cues", settings.judge.neutral_cues);
    read_if_present(judge, "refusal_cues", settings.judge.refusal_cues);
    if (settings.judge.neutral_cues.empty() || settings.judge.refusal_cues.empty()) {
      throw Error("run config: judge cue lists must be non-empty");
    }
  }

  if (root.contains("model")) {
    const json& model = root.at("model");
    if (!model.is_object()) throw Error("run config: \"model\" must be an object");
    reject_unknown(model,
                   {"endpoint", "name", "api_key_env", "temperature", "timeout",
                    "max_retries", "retry_backoff_base"},
                   "model.");
    read_if_present(model, "endpoint", settings.model.endpoint_url);
    read_if_present(model, "name", settings.model.model_name);
    read_if_present(model, "api_key_env", settings.model.api_key_env);
    read_if_present(model, "temperature", settings.model.temperature);
    read_if_present(model, "timeout", settings.model.request_timeout);
    read_if_present(model, "max_retries", settings.model.max_retries);
    read_if_present(model, "retry_backoff_base", settings.model.retry_backoff_base);
    settings.endpoint_configured = !settings.model.endpoint_url.empty();
  }

  if (!settings.lexicon_path.empty() && !fs::exists(settings.lexicon_path)) {
    throw Error("run config: lexicon path does not exist: " + settings.lexicon_path);
  }
  return settings;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& lexicon_path, std::ostream& out, std::ostream& err) {
  std::string document;
  try {
    document = read_file(lexicon_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitEnvironment;
  }
  Lexicon lexicon;
  try {
    lexicon = parse_lexicon(document);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitEnvironment;
  }
  ValidationReport report = validate_lexicon(lexicon);
  if (!report.empty()) {
    for (const auto& violation : report) {
      out << violation.path << ": " << violation.code << ": " << violation.message << "\n";
    }
    out << report.size() << " violation(s)\n";
    return kExitUserError;
  }
  std::set<std::string> categories;
  for (const auto& entry : lexicon.taxonomy) categories.insert(entry.category);
  out << "OK: " << categories.size() << " categories, " << lexicon.taxonomy.size()
      << " sub-categories, " << lexicon.templates.size() << " templates\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// expand
// ---------------------------------------------------------------------------

int cmd_expand(const std::string& lexicon_path, const std::optional<std::string>& context,
               const std::string& out_path, ArticleMode article_mode, std::ostream& out,
               std::ostream& err) {
  Lexicon lexicon;
  try {
    lexicon = load_lexicon_file(lexicon_path);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitEnvironment;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitEnvironment;
  }
  ValidationReport report = validate_lexicon(lexicon);
  if (!report.empty()) {
    for (const auto& violation : report) {
      err << violation.path << ": " << violation.code << ": " << violation.message << "\n";
    }
    err << "error: lexicon failed validation with " << report.size() << " violation(s)\n";
    return kExitUserError;
  }
  try {
    if (context) lexicon = filter_by_context(lexicon, *context);
  } catch (const UnknownContextError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  }
  if (lexicon.templates.empty()) {
    err << "error: filter removed every template (FilterEmpty)\n";
    return kExitUserError;
  }

  std::ostringstream csv;
  csv << "template_id,scenario_family,category,sub_category,level,prompt\n";
  auto escape = [](const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
      if (c == '"') quoted.push_back('"');
      quoted.push_back(c);
    }
    quoted.push_back('"');
    return quoted;
  };
  std::uint64_t rows = 0;
  for (const auto& tmpl : lexicon.templates) {
    const XFactorEntry* x1 = lexicon.find_xfactor(tmpl.xfactor1_id);
    const XFactorEntry* x2 = lexicon.find_xfactor(tmpl.xfactor2_id);
    for (const auto& s1 : x1->draw_pool()) {
      for (const auto& s2 : x2->draw_pool()) {
        csv << escape(tmpl.id) << "," << escape(tmpl.scenario_family) << ","
            << escape(tmpl.category) << "," << escape(tmpl.sub_category) << ","
            << tmpl.level << "," << escape(assemble_prompt(tmpl, s1, s2, article_mode))
            << "\n";
        ++rows;
      }
    }
  }
  try {
    write_file_atomic(out_path, csv.str());
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitEnvironment;
  }
  out << "wrote " << rows << " prompts for " << lexicon.templates.size()
      << " templates to " << out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const RunSettings& settings, const std::optional<std::string>& mock_path,
            std::ostream& out, std::ostream& err) {
  if (settings.lexicon_path.empty()) {
    err << "error: no lexicon given (set \"lexicon\" in the config or pass --lexicon)\n";
    return kExitUserError;
  }
  Lexicon lexicon;
  try {
    lexicon = load_lexicon_file(settings.lexicon_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  }
  ValidationReport report = validate_lexicon(lexicon);
  if (!report.empty()) {
    for (const auto& violation : report) {
      err << violation.path << ": " << violation.code << ": " << violation.message << "\n";
    }
    err << "error: lexicon failed validation with " << report.size() << " violation(s)\n";
    return kExitUserError;
  }

  std::unique_ptr<ModelClient> client;
  std::string model_label;
  if (mock_path) {
    try {
      client = std::make_unique<MockScriptClient>(load_mock_script_file(*mock_path));
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUserError;
    }
    model_label = "mock";
  } else {
    if (!settings.endpoint_configured || settings.model.endpoint_url.empty()) {
      err << "error: no model endpoint configured; set model.endpoint / --endpoint or "
             "use --mock\n";
      return kExitUserError;
    }
    if (!settings.model.api_key_env.empty() &&
        std::getenv(settings.model.api_key_env.c_str()) == nullptr) {
      err << "error: environment variable " << settings.model.api_key_env
          << " is not set; export it or clear model.api_key_env\n";
      return kExitUserError;
    }
    try {
      client = std::make_unique<HttpModelClient>(settings.model);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUserError;
    }
    model_label = settings.model.model_name.empty() ? settings.model.endpoint_url
                                                    : settings.model.model_name;
  }

  AssessmentConfig config;
  config.master_seed = settings.seed;
  config.samples_per_level = settings.samples_per_level;
  config.context = settings.context;
  config.categories = settings.categories;
  config.article_mode = settings.article_mode;
  config.max_concurrent_sessions = settings.concurrency;
  config.request_timeout = settings.model.request_timeout;
  config.max_retries = settings.model.max_retries;

  std::vector<SessionState> sessions;
  try {
    sessions = run_assessment(lexicon, config, *client, settings.judge);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  }

  std::vector<CategoryStats> stats = compute_metrics(sessions, lexicon);

  RunInfo run;
  run.lexicon_name = lexicon.metadata.name;
  run.lexicon_version = lexicon.metadata.version;
  run.model = model_label;
  run.master_seed = settings.seed;
  run.samples_per_level = settings.samples_per_level;
  run.article_mode = std::string(to_string(settings.article_mode));
  run.context = settings.context;
  if (settings.categories) {
    run.categories =
        std::vector<std::string>(settings.categories->begin(), settings.categories->end());
  }

  ReportDocument doc = make_report_document(stats, sessions, run, /*include_traces=*/true);
  try {
    fs::create_directories(settings.out_dir);
    write_file_atomic(fs::path(settings.out_dir) / "report.json", render_json(doc));
    write_file_atomic(fs::path(settings.out_dir) / "report.md", render_markdown(doc));
    write_file_atomic(fs::path(settings.out_dir) / "traces.csv", render_traces_csv(doc));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitEnvironment;
  }

  const ReportTotals& totals = doc.totals;
  out << "Scenarios: " << totals.scenarios_total << " (failed " << totals.scenarios_failed
      << ", passed " << totals.scenarios_passed << ", inconclusive "
      << totals.scenarios_inconclusive << ")\n";
  out << "Probes: " << totals.probes_total << " (toward X1 " << totals.biased_x1
      << ", toward X2 " << totals.biased_x2 << ", neutral " << totals.neutral
      << ", refusal " << totals.refusal << ", inconclusive " << totals.inconclusive
      << ", transport errors " << totals.transport_errors << ")\n";
  for (const auto& group : doc.categories) {
    if (group.bias_rate && *group.bias_rate > 0) {
      out << "  biased: " << group.category << " / " << group.sub_category
          << " (bias rate " << *group.bias_rate << ")\n";
    }
  }
  out << "Reports written to " << settings.out_dir
      << ": report.json report.md traces.csv\n";

  if (totals.probes_total > 0 && totals.transport_errors == totals.probes_total) {
    err << "error: every probe failed with a transport error\n";
    return kExitEnvironment;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& input_path, const std::string& format,
               const std::optional<std::string>& lexicon_path,
               const std::optional<std::string>& out_path, std::ostream& out,
               std::ostream& err) {
  std::string input;
  try {
    input = read_file(input_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  }

  ReportDocument doc;
  bool loaded = false;
  if (!input.empty() && (input[0] == '{' || input[0] == '[')) {
    try {
      doc = parse_report_document(input);
      loaded = true;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUserError;
    }
  }
  if (!loaded) {
    // Not JSON: treat as a traces CSV, which needs the lexicon for grouping.
    if (!lexicon_path) {
      err << "error: rebuilding reports from a traces csv requires --lexicon\n";
      return kExitUserError;
    }
    try {
      Lexicon lexicon = load_lexicon_file(*lexicon_path);
      std::vector<SessionRecord> records = parse_traces_csv(input);
      std::vector<SessionState> sessions = sessions_from_records(records, lexicon);
      RunInfo run;
      run.lexicon_name = lexicon.metadata.name;
      run.lexicon_version = lexicon.metadata.version;
      run.model = "unknown";
      doc = make_report_document(compute_metrics(sessions, lexicon), sessions, run,
                                 /*include_traces=*/true);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUserError;
    }
  }

  std::string rendered;
  if (format == "json") {
    rendered = render_json(doc);
  } else if (format == "markdown" || format == "md") {
    rendered = render_markdown(doc);
  } else if (format == "csv") {
    rendered = doc.has_traces ? render_traces_csv(doc) : render_stats_csv(doc.categories);
  } else {
    err << "error: unknown format \"" << format << "\"\n";
    return kExitUserError;
  }

  if (out_path) {
    try {
      write_file_atomic(*out_path, rendered);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitEnvironment;
    }
  } else {
    out << rendered;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"biasprobe: adaptive bias probing for chat-completions endpoints"};
  app.require_subcommand(1);

  // validate
  auto* validate = app.add_subcommand("validate", "Check a lexicon file");
  std::string validate_lexicon_path;
  validate->add_option("lexicon", validate_lexicon_path, "Lexicon JSON file")->required();

  // expand
  auto* expand = app.add_subcommand("expand", "Write the full static prompt corpus as CSV");
  std::string expand_lexicon_path;
  std::optional<std::string> expand_context;
  std::string expand_out;
  std::string expand_articles = "literal";
  expand->add_option("lexicon", expand_lexicon_path, "Lexicon JSON file")->required();
  expand->add_option("--context", expand_context, "Keep only this context tag");
  expand->add_option("--out", expand_out, "Output CSV path")->required();
  expand->add_option("--articles", expand_articles, "Article handling: literal|resolve");

  // run
  auto* run = app.add_subcommand("run", "Run an adaptive assessment");
  std::optional<std::string> run_config_path;
  std::optional<std::string> run_mock;
  std::optional<std::string> run_lexicon;
  std::optional<std::string> run_context;
  std::optional<std::string> run_categories;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_samples;
  std::optional<std::string> run_articles;
  std::optional<std::string> run_out;
  std::optional<std::string> run_endpoint;
  std::optional<std::string> run_model;
  std::optional<double> run_timeout;
  std::optional<int> run_retries;
  std::optional<int> run_concurrency;
  run->add_option("--config", run_config_path, "Run configuration JSON file");
  run->add_option("--mock", run_mock, "Answer prompts from this mock script (no network)");
  run->add_option("--lexicon", run_lexicon, "Lexicon JSON file");
  run->add_option("--context", run_context, "Context tag filter");
  run->add_option("--categories", run_categories, "Comma-separated category filter");
  run->add_option("--seed", run_seed, "Master seed (default 0)");
  run->add_option("--samples-per-level", run_samples, "Probes per level (default 1)");
  run->add_option("--articles", run_articles, "Article handling: literal|resolve");
  run->add_option("--out", run_out, "Output directory (default reports)");
  run->add_option("--endpoint", run_endpoint, "Chat-completions endpoint URL");
  run->add_option("--model", run_model, "Model name sent in requests");
  run->add_option("--timeout", run_timeout, "Request timeout in seconds");
  run->add_option("--retries", run_retries, "Max retries per request");
  run->add_option("--concurrency", run_concurrency, "Max concurrent sessions");

  // report
  auto* report = app.add_subcommand("report", "Re-render an existing report");
  std::string report_input;
  std::string report_format = "markdown";
  std::optional<std::string> report_lexicon;
  std::optional<std::string> report_out;
  report->add_option("input", report_input, "report.json or traces.csv from a run")
      ->required();
  report->add_option("--format", report_format, "Output format: json|markdown|csv");
  report->add_option("--lexicon", report_lexicon, "Lexicon file (needed for csv input)");
  report->add_option("--out", report_out, "Write to this file instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  }

  try {
    if (validate->parsed()) {
      return cmd_validate(validate_lexicon_path, out, err);
    }
    if (expand->parsed()) {
      return cmd_expand(expand_lexicon_path, expand_context, expand_out,
                        article_mode_from_string(expand_articles), out, err);
    }
    if (run->parsed()) {
      RunSettings settings;
      if (run_config_path) {
        settings = load_run_config(*run_config_path);
      }
      if (run_lexicon) settings.lexicon_path = *run_lexicon;
      if (run_context) settings.context = *run_context;
      if (run_categories) {
        auto names = split_comma_list(*run_categories);
        settings.categories = std::set<std::string>(names.begin(), names.end());
      }
      if (run_seed) settings.seed = *run_seed;
      if (run_samples) settings.samples_per_level = *run_samples;
      if (run_articles) settings.article_mode = article_mode_from_string(*run_articles);
      if (run_out) settings.out_dir = *run_out;
      if (run_endpoint) {
        settings.model.endpoint_url = *run_endpoint;
        settings.endpoint_configured = true;
      }
      if (run_model) settings.model.model_name = *run_model;
      if (run_timeout) settings.model.request_timeout = *run_timeout;
      if (run_retries) settings.model.max_retries = *run_retries;
      if (run_concurrency) settings.concurrency = *run_concurrency;
      if (settings.samples_per_level < 1) {
        err << "error: samples-per-level must be >= 1\n";
        return kExitUserError;
      }
      if (settings.concurrency < 1) {
        err << "error: concurrency must be >= 1\n";
        return kExitUserError;
      }
      return cmd_run(settings, run_mock, out, err);
    }
    if (report->parsed()) {
      return cmd_report(report_input, report_format, report_lexicon, report_out, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  }
  err << "error: no subcommand given\n";
  return kExitUserError;
}

}  // namespace biasprobe
