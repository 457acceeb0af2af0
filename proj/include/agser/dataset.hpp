#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace agser {

enum class Domain { Books, Movies, GCI, Other };

std::string_view to_string(Domain domain);
Domain parse_domain(std::string_view name);

struct DatasetSample {
  std::string id;
  std::string question;
  std::string gold_answer;
  Domain domain = Domain::Other;

  bool operator==(const DatasetSample&) const = default;
};

/// JSONL: one {"id","question","gold_answer"[,"domain"]} object per line.
/// Blank lines are skipped. Malformed lines raise Parse naming the 1-based
/// line number; repeated ids raise Validation.
std::vector<DatasetSample> parse_dataset(std::istream& in, std::string_view source = "<input>");
std::vector<DatasetSample> load_dataset(const std::string& path);

}  // namespace agser
