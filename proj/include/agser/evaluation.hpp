#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agser/dataset.hpp"
#include "agser/metrics.hpp"
#include "agser/pipeline.hpp"

namespace agser {

struct ResampleResult {
  double score = 0.0;  // mean Rouge-L of the resampled answers against the original
  std::string original_answer;
  std::vector<std::string> resampled;
};

/// SelfCheckGPT-style consistency: one greedy answer plus `n` sampled answers
/// with seeds base_seed+1..base_seed+n (n + 1 generate calls). Throws
/// Capability when the backend cannot vary answers by seed.
ResampleResult resample_baseline(std::string_view query, const PromptTemplate& tmpl,
                                 const Backend& backend, int n, std::uint64_t base_seed);

struct EvalOptions {
  PipelineConfig pipeline;
  LabelMode label_mode = LabelMode::RougeThreshold;
  double threshold = 0.5;
  bool compare_resample = false;
  int resample_n = 5;
  std::size_t workers = 1;
};

struct SampleOutcome {
  DatasetSample sample;
  DetectionRecord record;
  bool label = false;  // true: not a hallucination
  std::optional<double> resample_score;
};

struct SampleFailure {
  std::string id;
  std::string kind;
  std::string message;
};

/// Proportions per label class for one consistency score.
struct DistributionTable {
  Distribution non_hallucination{};
  Distribution hallucination{};
};

struct EvalReport {
  double auc = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_hallucination = 0;
  DistributionTable bins_att;
  DistributionTable bins_non_att;
  std::optional<double> resample_auc;
  int resample_n = 0;
  std::vector<SampleOutcome> outcomes;  // dataset order
  std::vector<SampleFailure> failures;  // samples dropped after a pass failed
  nlohmann::json config;                // run configuration snapshot
};

/// Runs detection on every sample over a pool of `workers` threads and
/// aggregates in dataset order. A sample whose detection throws is listed in
/// `failures` and left out of the metrics. Throws UndefinedMetric when the
/// scored samples do not contain both classes.
EvalReport evaluate(const std::vector<DatasetSample>& samples, const EvalOptions& options,
                    const Backend& backend, nlohmann::json config_snapshot = {});

/// Full report. `generated_at` is the only field that varies between
/// identical runs; pass an empty string to omit it.
nlohmann::json report_to_json(const EvalReport& report, const std::string& generated_at);
/// id,r_att,r_non_att,r,label[,resample]
std::string report_to_csv(const EvalReport& report);
/// The two 4-bin tables plus the AUC line(s), as printed by `agser eval`.
std::string format_report_summary(const EvalReport& report);
std::string format_distribution(std::string_view title, const DistributionTable& table);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

}  // namespace agser
