#include "agser/dataset.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "agser/error.hpp"

namespace agser {

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::Books: return "books";
    case Domain::Movies: return "movies";
    case Domain::GCI: return "gci";
    case Domain::Other: return "other";
  }
  return "other";
}

Domain parse_domain(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "books") return Domain::Books;
  if (lower == "movies") return Domain::Movies;
  if (lower == "gci") return Domain::GCI;
  if (lower == "other") return Domain::Other;
  throw Error(ErrorKind::Validation, "unknown domain '" + std::string(name) + "'");
}

std::vector<DatasetSample> parse_dataset(std::istream& in, std::string_view source) {
  std::vector<DatasetSample> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  const auto where = [&] { return std::string(source) + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    DatasetSample s;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw Error(ErrorKind::Parse, where() + ": expected a JSON object");
      for (const char* field : {"id", "question", "gold_answer"})
        if (!j.contains(field) || !j[field].is_string())
          throw Error(ErrorKind::Parse, where() + ": missing string field '" + field + "'");
      s.id = j["id"].get<std::string>();
      s.question = j["question"].get<std::string>();
      s.gold_answer = j["gold_answer"].get<std::string>();
      if (j.contains("domain")) {
        if (!j["domain"].is_string()) throw Error(ErrorKind::Parse, where() + ": 'domain' must be a string");
        s.domain = parse_domain(j["domain"].get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, where() + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Parse) throw;
      throw Error(e.kind(), where() + ": " + e.what());
    }
    if (s.id.empty() || s.question.empty() || s.gold_answer.empty())
      throw Error(ErrorKind::Validation, where() + ": id, question and gold_answer must be non-empty");
    if (!ids.insert(s.id).second)
      throw Error(ErrorKind::Validation, where() + ": duplicate id '" + s.id + "'");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<DatasetSample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open dataset '" + path + "'");
  return parse_dataset(in, path);
}

}  // namespace agser
