#include "agser/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

#include "agser/consistency.hpp"
#include "agser/error.hpp"

namespace agser {

ResampleResult resample_baseline(std::string_view query, const PromptTemplate& tmpl,
                                 const Backend& backend, int n, std::uint64_t base_seed) {
  if (n < 1) throw Error(ErrorKind::Configuration, "resample count must be at least 1");
  if (!backend.supports_seeded_variation())
    throw Error(ErrorKind::Capability,
                "backend '" + std::string(backend.name()) + "' cannot produce seeded answer variants");
  const RenderedPrompt prompt = render_prompt(tmpl, query);
  ResampleResult out;
  out.original_answer = backend.generate(prompt).answer_text;
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    SamplingOptions opts;
    opts.sample = true;
    opts.seed = base_seed + static_cast<std::uint64_t>(i);
    auto answer = backend.generate(prompt, opts).answer_text;
    total += rouge_l(answer, out.original_answer);
    out.resampled.push_back(std::move(answer));
  }
  out.score = total / static_cast<double>(n);
  return out;
}

namespace {

struct Slot {
  std::optional<SampleOutcome> outcome;
  std::optional<SampleFailure> failure;
};

Slot run_sample(const DatasetSample& sample, const EvalOptions& options, const Backend& backend) {
  Slot slot;
  try {
    SampleOutcome o;
    o.sample = sample;
    o.record = detect(sample.question, options.pipeline, backend);
    o.label = options.label_mode == LabelMode::ExactMatch
                  ? label_exact_match(o.record.original_answer, sample.gold_answer)
                  : label_correctness(o.record.original_answer, sample.gold_answer, options.threshold);
    if (options.compare_resample)
      o.resample_score = resample_baseline(sample.question, options.pipeline.prompt_template, backend,
                                           options.resample_n, options.pipeline.backend.seed)
                             .score;
    slot.outcome = std::move(o);
  } catch (const Error& e) {
    // Configuration and capability problems are not per-sample; let them stop the run.
    if (e.kind() == ErrorKind::Configuration || e.kind() == ErrorKind::Capability) throw;
    slot.failure = SampleFailure{sample.id, std::string(to_string(e.kind())), e.what()};
  }
  return slot;
}

DistributionTable class_bins(const std::vector<SampleOutcome>& outcomes, bool attentive) {
  std::vector<double> pos, neg;
  for (const auto& o : outcomes) {
    const double v = attentive ? o.record.pair.r_att : o.record.pair.r_non_att;
    (o.label ? pos : neg).push_back(v);
  }
  return {bin_distribution(pos), bin_distribution(neg)};
}

}  // namespace

EvalReport evaluate(const std::vector<DatasetSample>& samples, const EvalOptions& options,
                    const Backend& backend, nlohmann::json config_snapshot) {
  if (options.compare_resample && !backend.supports_seeded_variation())
    throw Error(ErrorKind::Capability, "the resample baseline needs a backend with seeded sampling; '" +
                                           std::string(backend.name()) + "' has none");
  std::vector<Slot> slots(samples.size());
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(samples.size(), 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) slots[i] = run_sample(samples[i], options, backend);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < samples.size(); i = next++)
            slots[i] = run_sample(samples[i], options, backend);
        } catch (...) {
          errors[w] = std::current_exception();
          next = samples.size();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  report.config = std::move(config_snapshot);
  for (auto& s : slots) {
    if (s.outcome) report.outcomes.push_back(std::move(*s.outcome));
    if (s.failure) report.failures.push_back(std::move(*s.failure));
  }
  report.n_samples = report.outcomes.size();
  std::vector<double> scores, baseline;
  std::vector<bool> labels;
  for (const auto& o : report.outcomes) {
    scores.push_back(o.record.score.r);
    labels.push_back(o.label);
    if (!o.label) ++report.n_hallucination;
    if (o.resample_score) baseline.push_back(*o.resample_score);
  }
  report.auc = auc(scores, labels);
  report.bins_att = class_bins(report.outcomes, true);
  report.bins_non_att = class_bins(report.outcomes, false);
  if (options.compare_resample) {
    report.resample_n = options.resample_n;
    report.resample_auc = auc(baseline, labels);
  }
  return report;
}

std::string format_number(double v) { return nlohmann::json(v).dump(); }

nlohmann::json report_to_json(const EvalReport& report, const std::string& generated_at) {
  auto table = [](const DistributionTable& t) {
    return nlohmann::json{{"non_hallucination", t.non_hallucination}, {"hallucination", t.hallucination}};
  };
  nlohmann::json j;
  j["metric"] = "auc";
  j["auc"] = report.auc;
  j["n_samples"] = report.n_samples;
  j["n_hallucination"] = report.n_hallucination;
  j["bins"] = {"[0.0,0.25)", "[0.25,0.5)", "[0.5,0.75)", "[0.75,1.0]"};
  j["distributions"] = {{"r_att", table(report.bins_att)}, {"r_non_att", table(report.bins_non_att)}};
  nlohmann::json baselines;
  baselines["resample"] = report.resample_auc
                              ? nlohmann::json{{"n", report.resample_n}, {"auc", *report.resample_auc}}
                              : nlohmann::json(nullptr);
  // Slots for baselines this tool does not implement.
  baselines["sbert"] = nullptr;
  baselines["inside"] = nullptr;
  baselines["interrogatellm"] = nullptr;
  j["baselines"] = std::move(baselines);
  j["config"] = report.config;
  nlohmann::json records = nlohmann::json::array();
  for (const auto& o : report.outcomes) {
    auto r = record_to_json(o.record);
    r["id"] = o.sample.id;
    r["domain"] = to_string(o.sample.domain);
    r["gold_answer"] = o.sample.gold_answer;
    r["label"] = o.label ? "non_hallucination" : "hallucination";
    if (o.resample_score) r["resample_score"] = *o.resample_score;
    records.push_back(std::move(r));
  }
  j["records"] = std::move(records);
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"id", f.id}, {"kind", f.kind}, {"message", f.message}});
  j["failures"] = std::move(failures);
  if (!generated_at.empty()) j["generated_at"] = generated_at;
  return j;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "id,r_att,r_non_att,r,label";
  if (report.resample_auc) out << ",resample";
  out << '\n';
  for (const auto& o : report.outcomes) {
    out << csv_field(o.sample.id) << ',' << format_number(o.record.pair.r_att) << ','
        << format_number(o.record.pair.r_non_att) << ',' << format_number(o.record.score.r) << ','
        << (o.label ? 1 : 0);
    if (report.resample_auc) out << ',' << (o.resample_score ? format_number(*o.resample_score) : "");
    out << '\n';
  }
  return out.str();
}

std::string format_distribution(std::string_view title, const DistributionTable& table) {
  std::ostringstream out;
  out << title << '\n';
  auto block = [&](std::string_view label, const Distribution& d) {
    out << "  " << label << '\n';
    out << "  " << std::left << std::setw(12) << "[0.0,0.25)" << std::setw(12) << "[0.25,0.5)"
        << std::setw(12) << "[0.5,0.75)" << "[0.75,1.0]" << '\n';
    out << "  " << std::fixed << std::setprecision(3);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i + 1 < d.size())
        out << std::setw(12) << d[i];
      else
        out << d[i];
    }
    out << '\n';
    out.unsetf(std::ios::floatfield);
  };
  block("Non-hallucination Samples", table.non_hallucination);
  block("Hallucination Samples", table.hallucination);
  return out.str();
}

std::string format_report_summary(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "samples: " << report.n_samples << " (" << report.n_hallucination << " hallucinated)";
  if (!report.failures.empty()) out << ", " << report.failures.size() << " failed";
  out << '\n';
  out << "AUC (AGSER): " << report.auc << '\n';
  if (report.resample_auc)
    out << "AUC (resample, n=" << report.resample_n << "): " << *report.resample_auc << '\n';
  out << '\n' << format_distribution("Attentive consistency scores (r_att)", report.bins_att);
  out << '\n' << format_distribution("Non-attentive consistency scores (r_non_att)", report.bins_non_att);
  return out.str();
}

}  // namespace agser
