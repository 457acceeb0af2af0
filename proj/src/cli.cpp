#include "agser/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "agser/error.hpp"
#include "agser/remote_backend.hpp"
#include "agser/wire.hpp"

namespace agser {

namespace {

struct Flags {
  std::string question;
  std::string dataset;
  std::string backend = "scripted";
  std::string endpoint;
  std::string script;
  std::string weights;
  std::string template_path;
  std::string k = "2/3";
  double lambda = 1.0;
  std::string strategy = "mean";
  double threshold = 0.5;
  std::string label_mode = "rouge";
  std::string compare;
  int n = 5;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed = 42;
  int max_new_tokens = 24;
  std::string out = "agser-report.json";
  std::string host = "127.0.0.1";
  int port = 8080;
};

void add_backend_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--backend", f.backend, "reference | scripted | remote")
      ->check(CLI::IsMember({"reference", "scripted", "remote"}))
      ->capture_default_str();
  cmd->add_option("--endpoint", f.endpoint, "remote endpoint URL (falls back to $AGSER_ENDPOINT)");
  cmd->add_option("--script", f.script, "script file for the scripted backend");
  cmd->add_option("--weights", f.weights, "weights file for the reference backend");
  cmd->add_option("--seed", f.seed, "backend seed")->capture_default_str();
  cmd->add_option("--max-new-tokens", f.max_new_tokens, "answer length limit")->capture_default_str();
}

void add_pipeline_flags(CLI::App* cmd, Flags& f) {
  add_backend_flags(cmd, f);
  cmd->add_option("--template", f.template_path, "prompt template file with one {question} slot");
  cmd->add_option("--k", f.k, "attentive fraction, decimal or p/q")->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "weight of the attentive consistency")->capture_default_str();
  cmd->add_option("--strategy", f.strategy, "first | mid | last | max | mean")
      ->check(CLI::IsMember({"first", "mid", "last", "max", "mean"}, CLI::ignore_case))
      ->capture_default_str();
}

RunConfig build_config(const Flags& f) {
  RunConfig rc;
  BackendConfig& b = rc.pipeline.backend;
  b.kind = parse_backend_kind(f.backend);
  b.seed = f.seed;
  b.max_new_tokens = f.max_new_tokens;
  if (b.kind == BackendKind::Remote) {
    if (!f.endpoint.empty()) {
      b.endpoint = f.endpoint;
    } else if (const char* env = std::getenv("AGSER_ENDPOINT"); env && *env) {
      b.endpoint = env;
    }
  } else if (!f.endpoint.empty()) {
    b.endpoint = f.endpoint;  // rejected by validate()
  }
  if (!f.script.empty()) b.script_path = f.script;
  if (!f.weights.empty()) b.weights_path = f.weights;
  b.validate();

  rc.k_text = f.k;
  rc.pipeline.k = Fraction::parse(f.k);
  if (rc.pipeline.k.num() <= 0 || rc.pipeline.k.num() >= rc.pipeline.k.den())
    throw Error(ErrorKind::Configuration, "--k must lie strictly between 0 and 1");
  if (!(f.lambda > 0.0)) throw Error(ErrorKind::Configuration, "--lambda must be positive");
  rc.pipeline.lambda = f.lambda;
  rc.pipeline.strategy = parse_strategy(f.strategy);
  if (!f.template_path.empty()) {
    rc.template_path = f.template_path;
    rc.pipeline.prompt_template = PromptTemplate::load(f.template_path);
  }
  if (!f.question.empty()) rc.question = f.question;
  if (!f.dataset.empty()) rc.dataset = f.dataset;
  rc.out = f.out;
  rc.workers = std::max<std::size_t>(f.workers, 1);
  if (!(f.threshold > 0.0 && f.threshold <= 1.0))
    throw Error(ErrorKind::Configuration, "--threshold must lie in (0, 1]");
  rc.threshold = f.threshold;
  rc.label_mode = parse_label_mode(f.label_mode);
  if (!f.compare.empty()) {
    if (f.compare != "resample")
      throw Error(ErrorKind::Configuration, "--compare supports only 'resample'");
    rc.compare = f.compare;
  }
  if (f.n < 1) throw Error(ErrorKind::Configuration, "--n must be at least 1");
  rc.n = f.n;
  return rc;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Configuration:
    case ErrorKind::DegenerateInput:
    case ErrorKind::Capability: return kExitUsage;
    case ErrorKind::Transport:
    case ErrorKind::Capacity: return kExitBackend;
    case ErrorKind::UndefinedMetric: return kExitUndefined;
    case ErrorKind::Parse:
    case ErrorKind::Validation: return kExitData;
    case ErrorKind::Structural: return kExitInternal;
  }
  return kExitInternal;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Configuration, "cannot write '" + path + "'");
  f << content;
  if (!f) throw Error(ErrorKind::Configuration, "failed writing '" + path + "'");
}

int cmd_detect(const RunConfig& rc, std::ostream& out) {
  if (!rc.question) throw Error(ErrorKind::Configuration, "detect needs --question");
  const auto backend = make_backend(rc.pipeline.backend);
  const auto record = detect(*rc.question, rc.pipeline, *backend);
  out << dump_json(record_to_json(record), 2) << '\n';
  return kExitOk;
}

int cmd_split(const RunConfig& rc, std::ostream& out) {
  if (!rc.question) throw Error(ErrorKind::Configuration, "split needs --question");
  const auto backend = make_backend(rc.pipeline.backend);
  const auto a = analyze_query(*rc.question, rc.pipeline, *backend);
  const std::string& sep = a.original.token_separator;
  const auto shown = [&](const TokenSequence& s) { return s.join(sep); };

  out << std::left;
  out << std::setw(21) << "Query" << *rc.question << '\n';
  out << std::setw(21) << "Original Answer" << a.original.answer_text << '\n';
  out << std::setw(21) << "Attentive Query" << shown(a.split.attentive) << '\n';
  out << std::setw(21) << "Non-attentive Query" << shown(a.split.non_attentive) << '\n';
  out << std::setw(21) << "Attentive tokens" << a.split.m_attentive << " of " << a.question.size()
      << " (k=" << a.split.k.str() << ", strategy=" << to_string(rc.pipeline.strategy) << ")\n\n";

  std::vector<bool> attentive(a.question.size() + 1, false);
  for (std::size_t p : a.split.attentive.positions) attentive[p] = true;
  out << std::setw(6) << "pos" << std::setw(24) << "token" << std::setw(12) << "score" << "side\n";
  for (std::size_t i = 0; i < a.question.size(); ++i) {
    std::ostringstream score;
    score << std::fixed << std::setprecision(6) << a.question_scores[i];
    out << std::setw(6) << (i + 1) << std::setw(24) << a.question.tokens[i] << std::setw(12)
        << score.str() << (attentive[i + 1] ? "attentive" : "non-attentive") << '\n';
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (!rc.dataset) throw Error(ErrorKind::Configuration, "eval needs --dataset");
  const auto samples = load_dataset(*rc.dataset);
  if (samples.empty()) throw Error(ErrorKind::UndefinedMetric, "dataset '" + *rc.dataset + "' is empty");
  const auto backend = make_backend(rc.pipeline.backend);
  EvalOptions opts;
  opts.pipeline = rc.pipeline;
  opts.label_mode = rc.label_mode;
  opts.threshold = rc.threshold;
  opts.compare_resample = rc.compare.has_value();
  opts.resample_n = rc.n;
  opts.workers = rc.workers;
  const auto report = evaluate(samples, opts, *backend, rc.to_json());

  const std::string csv_path = csv_path_for(rc.out);
  write_file(rc.out, dump_json(report_to_json(report, utc_timestamp()), 2) + "\n");
  write_file(csv_path, report_to_csv(report));
  out << format_report_summary(report);
  err << "wrote " << rc.out << " and " << csv_path << '\n';
  for (const auto& f : report.failures) err << "sample " << f.id << " failed (" << f.kind << "): " << f.message << '\n';
  return kExitOk;
}

int cmd_serve(const Flags& f, std::ostream& out) {
  BackendConfig b;
  b.kind = parse_backend_kind(f.backend);
  if (b.kind == BackendKind::Remote) throw Error(ErrorKind::Configuration, "serve cannot front a remote backend");
  b.seed = f.seed;
  b.max_new_tokens = f.max_new_tokens;
  if (!f.script.empty()) b.script_path = f.script;
  if (!f.weights.empty()) b.weights_path = f.weights;
  const auto backend = make_backend(b);
  GenerationServer server(*backend);
  if (!server.bind(f.host, f.port))
    throw Error(ErrorKind::Configuration, "cannot bind " + f.host + ":" + std::to_string(f.port));
  out << "serving " << backend->name() << " backend on http://" << f.host << ":" << f.port << std::endl;
  server.listen();
  return kExitOk;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  const BackendConfig& b = pipeline.backend;
  auto opt = [](const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["backend"] = {{"kind", to_string(b.kind)},
                  {"seed", b.seed},
                  {"max_new_tokens", b.max_new_tokens},
                  {"endpoint", opt(b.endpoint)},
                  {"script", opt(b.script_path)},
                  {"weights", opt(b.weights_path)}};
  j["k"] = k_text;
  j["k_exact"] = pipeline.k.str();
  j["lambda"] = pipeline.lambda;
  j["strategy"] = to_string(pipeline.strategy);
  j["template"] = {{"path", opt(template_path)}, {"text", pipeline.prompt_template.text()}};
  j["question"] = opt(question);
  j["dataset"] = opt(dataset);
  j["out"] = out;
  j["csv"] = csv_path_for(out);
  j["workers"] = workers;
  j["threshold"] = threshold;
  j["label_mode"] = to_string(label_mode);
  j["labeling_note"] =
      label_mode == LabelMode::ExactMatch
          ? "exact normalized-token match against gold_answer"
          : "Rouge-L(original_answer, gold_answer) >= threshold; stand-in for the benchmark's own correctness rule";
  j["compare"] = opt(compare);
  j["n"] = n;
  return j;
}

std::string csv_path_for(const std::string& json_path) {
  constexpr std::string_view kExt = ".json";
  if (json_path.size() > kExt.size() && json_path.compare(json_path.size() - kExt.size(), kExt.size(), kExt) == 0)
    return json_path.substr(0, json_path.size() - kExt.size()) + ".csv";
  return json_path + ".csv";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention-guided self-reflection hallucination detector", "agser"};
  app.require_subcommand(1);
  Flags f;

  auto* detect_cmd = app.add_subcommand("detect", "score one question and print the detection record as JSON");
  detect_cmd->add_option("--question", f.question, "question text")->required();
  add_pipeline_flags(detect_cmd, f);

  auto* split_cmd = app.add_subcommand("split", "show the attentive / non-attentive split of one question");
  split_cmd->add_option("--question", f.question, "question text")->required();
  add_pipeline_flags(split_cmd, f);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a JSONL dataset and write JSON + CSV reports");
  eval_cmd->add_option("--dataset", f.dataset, "JSONL dataset")->required();
  add_pipeline_flags(eval_cmd, f);
  eval_cmd->add_option("--threshold", f.threshold, "Rouge-L correctness threshold")->capture_default_str();
  eval_cmd->add_option("--label-mode", f.label_mode, "rouge | exact")
      ->check(CLI::IsMember({"rouge", "exact"}))
      ->capture_default_str();
  eval_cmd->add_option("--compare", f.compare, "baseline to add: resample")->check(CLI::IsMember({"resample"}));
  eval_cmd->add_option("--n", f.n, "resamples for the baseline")->capture_default_str();
  eval_cmd->add_option("--workers", f.workers, "parallel detections")->capture_default_str();
  eval_cmd->add_option("--out", f.out, "report JSON path (CSV goes next to it)")->capture_default_str();

  auto* serve_cmd = app.add_subcommand("serve", "serve a local backend over the remote HTTP protocol");
  add_backend_flags(serve_cmd, f);
  serve_cmd->add_option("--host", f.host)->capture_default_str();
  serve_cmd->add_option("--port", f.port)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve_cmd) return cmd_serve(f, out);
    const RunConfig rc = build_config(f);
    if (*detect_cmd) return cmd_detect(rc, out);
    if (*split_cmd) return cmd_split(rc, out);
    if (*eval_cmd) return cmd_eval(rc, out, err);
  } catch (const Error& e) {
    err << "agser: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "agser: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace agser
