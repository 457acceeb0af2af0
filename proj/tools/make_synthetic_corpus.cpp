// Writes the bundled scripted corpus: dataset.jsonl and script.json.
//
//   make_synthetic_corpus <out-dir>
//
// Output is a pure function of the fixed seed below; the check run after
// generation prints both AUCs so a regenerated corpus can be eyeballed.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <string>
#include <vector>

#include <json.hpp>

#include "agser/consistency.hpp"
#include "agser/evaluation.hpp"
#include "agser/pipeline.hpp"
#include "agser/scripted_backend.hpp"

namespace {

using agser::Domain;

constexpr std::uint64_t kSeed = 42;
constexpr int kVariants = 5;

// Per-bin sample counts for [0,0.25) [0.25,0.5) [0.5,0.75) [0.75,1].
constexpr std::array<int, 4> kCorrectAtt{0, 6, 24, 90};
constexpr std::array<int, 4> kCorrectNonAtt{120, 0, 0, 0};
constexpr std::array<int, 4> kWrongAtt{64, 10, 4, 2};
constexpr std::array<int, 4> kWrongNonAtt{64, 12, 2, 2};

struct Rng {
  std::mt19937 engine{kSeed};
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine() % n); }
  bool chance(unsigned percent) { return engine() % 100 < percent; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
};

const std::vector<std::string> kFirst = {
    "Alma",   "Bruno",  "Clara", "Dmitri", "Elena", "Felix",  "Greta", "Hugo",   "Ines",  "Jonas",
    "Karin",  "Lucas",  "Mira",  "Nadia",  "Oscar", "Petra",  "Quinn", "Rosa",   "Simon", "Tessa",
    "Umberto", "Vera",  "Walter", "Yara",  "Zoran", "Agnes",  "Boris", "Celia",  "Dario", "Edith"};
const std::vector<std::string> kLast = {
    "Abbott",  "Brandt",  "Castell", "Dunmore", "Ellison", "Fairley", "Garrow",  "Holloway",
    "Iverson", "Jarnell", "Kessler", "Lindqvist", "Marlowe", "Novak", "Orwin",   "Pellham",
    "Quarles", "Rainer",  "Sandoval", "Thorne", "Ulrich",  "Vance",   "Whitlock", "Yardley"};
const std::vector<std::string> kAdj = {
    "Silent", "Crimson", "Hollow", "Distant", "Broken", "Golden", "Winter", "Hidden", "Restless",
    "Paper", "Quiet", "Burning", "Lonely", "Velvet", "Northern", "Bitter", "Glass", "Amber"};
const std::vector<std::string> kNoun = {
    "Harbor", "Orchard", "Lantern", "Meridian", "Garden", "River", "Tower", "Compass", "Archive",
    "Mirror", "Summer", "Island", "Cathedral", "Frontier", "Letters", "Season", "Shore", "Kingdom"};

struct Country {
  const char* name;
  const char* capital;
};
const std::vector<Country> kCountries = {
    {"France", "Paris"},        {"Germany", "Berlin"},     {"Italy", "Rome"},
    {"Spain", "Madrid"},        {"Portugal", "Lisbon"},    {"Austria", "Vienna"},
    {"Hungary", "Budapest"},    {"Poland", "Warsaw"},      {"Sweden", "Stockholm"},
    {"Norway", "Oslo"},         {"Finland", "Helsinki"},   {"Denmark", "Copenhagen"},
    {"Ireland", "Dublin"},      {"Greece", "Athens"},      {"Belgium", "Brussels"},
    {"Netherlands", "Amsterdam"}, {"Switzerland", "Bern"}, {"Czechia", "Prague"},
    {"Romania", "Bucharest"},   {"Bulgaria", "Sofia"},     {"Serbia", "Belgrade"},
    {"Croatia", "Zagreb"},      {"Ukraine", "Kyiv"},       {"Lithuania", "Vilnius"},
    {"Latvia", "Riga"},         {"Estonia", "Tallinn"},    {"Iceland", "Reykjavik"},
    {"Egypt", "Cairo"},         {"Kenya", "Nairobi"},      {"Ghana", "Accra"},
    {"Nigeria", "Abuja"},       {"Ethiopia", "Addis Ababa"}, {"Morocco", "Rabat"},
    {"Senegal", "Dakar"},       {"Tanzania", "Dodoma"},    {"Uganda", "Kampala"},
    {"Japan", "Tokyo"},         {"China", "Beijing"},      {"India", "New Delhi"},
    {"Thailand", "Bangkok"},    {"Vietnam", "Hanoi"},      {"Indonesia", "Jakarta"},
    {"Malaysia", "Kuala Lumpur"}, {"Philippines", "Manila"}, {"Nepal", "Kathmandu"},
    {"Mongolia", "Ulaanbaatar"}, {"Iran", "Tehran"},       {"Iraq", "Baghdad"},
    {"Jordan", "Amman"},        {"Lebanon", "Beirut"},     {"Turkey", "Ankara"},
    {"Australia", "Canberra"},  {"Canada", "Ottawa"},      {"Mexico", "Mexico City"},
    {"Brazil", "Brasilia"},     {"Argentina", "Buenos Aires"}, {"Chile", "Santiago"},
    {"Peru", "Lima"},           {"Colombia", "Bogota"},    {"Venezuela", "Caracas"},
    {"Ecuador", "Quito"},       {"Bolivia", "Sucre"},      {"Uruguay", "Montevideo"},
    {"Paraguay", "Asuncion"},   {"Cuba", "Havana"},        {"Jamaica", "Kingston"}};

const std::vector<std::string> kBookTemplates = {
    "Who is the author of the book {}, and when was it published?",
    "Who wrote the book {}, and in which year was it published?",
    "What is the name of the author of the book {}, and what year was it first published?"};
const std::vector<std::string> kMovieTemplates = {
    "Who is the director of the movie {}, and when was it released?",
    "Who directed the movie {}, and in which year was it released?",
    "What is the name of the director of the film {}, and what year did it come out?"};
const std::vector<std::string> kCountryTemplates = {
    "What is the capital of {}?", "Which city is the capital of {}?",
    "What city serves as the capital of {}?"};

const std::vector<std::string> kFiller = {
    "perhaps", "probably", "maybe", "edition", "revised", "around", "circa", "sequel",
    "second",  "volume",   "later", "reprint", "early",   "version", "original", "series"};

std::string fill(const std::string& tmpl, const std::string& value) {
  const auto at = tmpl.find("{}");
  return tmpl.substr(0, at) + value + tmpl.substr(at + 2);
}

std::string person(Rng& rng) { return rng.pick(kFirst) + " " + rng.pick(kLast); }
std::string year(Rng& rng) { return std::to_string(1948 + rng.below(73)); }

std::size_t bin_of(double v) { return v < 0.25 ? 0 : v < 0.5 ? 1 : v < 0.75 ? 2 : 3; }

struct Generated {
  agser::DatasetSample sample;
  bool correct = false;
  std::string original;
};

// An answer shaped like the gold one that scores below `limit` against `avoid`
// and stays wrong with respect to the gold answer.
std::string unrelated(const Generated& g, const std::string& avoid, double limit, Rng& rng) {
  for (;;) {
    std::string a;
    if (g.sample.domain == Domain::GCI)
      a = std::string(rng.pick(kCountries).capital) + ".";
    else if (rng.chance(50))
      a = person(rng) + ", in " + year(rng) + ".";
    else
      a = person(rng) + ", " + year(rng) + ".";
    if (agser::rouge_l(a, avoid) < limit && agser::rouge_l(a, g.sample.gold_answer) < 0.5) return a;
  }
}

// An answer whose Rouge-L against `original` falls in `bin`.
std::string answer_in_bin(const Generated& g, std::size_t bin, Rng& rng) {
  const std::string& original = g.original;
  if (bin == 0) return unrelated(g, original, 0.25, rng);
  if (bin == 3 && rng.chance(80)) return original;
  const auto words = agser::whitespace_tokens(original);
  for (int attempt = 0; attempt < 2000; ++attempt) {
    const std::size_t n = words.size();
    const std::size_t keep = 1 + rng.below(n);
    const std::size_t extra = rng.below(8);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    std::string a;
    for (std::size_t i : idx) a += (a.empty() ? "" : " ") + words[i];
    for (std::size_t i = 0; i < extra; ++i) a += " " + rng.pick(kFiller);
    if (a == original) continue;
    if (bin_of(agser::rouge_l(a, original)) == bin) return a;
  }
  if (bin == 3) return original;  // one-word answers have no near miss
  throw std::runtime_error("no answer found for bin " + std::to_string(bin));
}

std::vector<std::size_t> bins_from_counts(const std::array<int, 4>& counts, Rng& rng) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < counts.size(); ++b) out.insert(out.end(), counts[b], b);
  rng.shuffle(out);
  return out;
}

// Answers for resampling: correct answers mostly repeat, wrong ones drift
// unless the model is stubborn about them.
std::vector<std::string> variants_for(const Generated& g, Rng& rng) {
  std::vector<std::string> v(kVariants, g.original);
  if (g.correct) {
    if (rng.chance(70)) return v;
    const std::size_t changed = 1 + rng.below(2);
    for (std::size_t i = 0; i < changed; ++i) v[rng.below(v.size())] = answer_in_bin(g, 2 + rng.below(2), rng);
    return v;
  }
  if (rng.chance(40)) return v;
  for (auto& a : v)
    if (!rng.chance(25)) a = answer_in_bin(g, rng.below(3), rng);
  return v;
}

std::vector<Generated> make_samples(Rng& rng) {
  std::vector<Generated> out;
  std::set<std::string> titles;
  auto unique_title = [&](Rng& r) {
    for (;;) {
      std::string t = "The " + r.pick(kAdj) + " " + r.pick(kNoun);
      if (titles.insert(t).second) return t;
    }
  };
  std::vector<bool> correct(200, false);
  std::fill(correct.begin(), correct.begin() + 120, true);
  rng.shuffle(correct);

  for (int i = 0; i < 200; ++i) {
    Generated g;
    const int d = i % 3;
    if (d == 2) {
      const Country& c = kCountries[static_cast<std::size_t>(i / 3)];
      g.sample.domain = Domain::GCI;
      g.sample.question = fill(i == 2 ? kCountryTemplates[0] : rng.pick(kCountryTemplates), c.name);
      g.sample.gold_answer = std::string(c.capital) + ".";
    } else {
      g.sample.domain = d == 0 ? Domain::Books : Domain::Movies;
      const auto& templates = d == 0 ? kBookTemplates : kMovieTemplates;
      g.sample.question = fill(rng.pick(templates), unique_title(rng));
      g.sample.gold_answer = person(rng) + ", in " + year(rng) + ".";
    }
    g.sample.id = std::string(to_string(g.sample.domain)) + "-" + std::to_string(1000 + i).substr(1);
    g.correct = correct[static_cast<std::size_t>(i)];
    g.original = g.correct ? g.sample.gold_answer : unrelated(g, g.sample.gold_answer, 0.5, rng);
    out.push_back(std::move(g));
  }
  return out;
}

agser::AttentionPattern random_pattern(std::size_t words, Rng& rng) {
  agser::AttentionPattern p;
  for (std::size_t pos = 1; pos <= words; ++pos)
    if (rng.chance(55)) p.peaked.push_back(pos);
  if (p.peaked.empty()) p.peaked.push_back(1 + rng.below(words));
  return p;
}

struct Subqueries {
  agser::AttentionPattern pattern;
  std::string attentive;
  std::string non_attentive;
};

// Short questions leave function-word halves that several samples share; a
// shared half keeps its first answer, so it is reused only when that answer
// still lands in the wanted bin.
bool usable(const std::map<std::string, std::string>& answers, const std::string& key,
            const Generated& g, std::size_t bin) {
  const auto it = answers.find(key);
  return it == answers.end() || bin_of(agser::rouge_l(it->second, g.original)) == bin;
}

Subqueries choose_split(const Generated& g, const agser::PipelineConfig& config,
                        const std::map<std::string, std::string>& answers, std::size_t att_bin,
                        std::size_t non_bin, Rng& rng) {
  const std::size_t words = agser::whitespace_tokens(g.sample.question).size();
  for (int attempt = 0; attempt < 5000; ++attempt) {
    Subqueries s;
    s.pattern = random_pattern(words, rng);
    agser::ScriptedBackend probe(agser::ScriptTable({{g.sample.question, g.original, s.pattern, {}}}));
    const auto a = agser::analyze_query(g.sample.question, config, probe);
    s.attentive = a.split.attentive.join(" ");
    s.non_attentive = a.split.non_attentive.join(" ");
    const bool fresh = !answers.count(s.attentive) && !answers.count(s.non_attentive);
    if (attempt < 200 && !fresh) continue;
    if (usable(answers, s.attentive, g, att_bin) && usable(answers, s.non_attentive, g, non_bin)) return s;
  }
  throw std::runtime_error("could not find a usable split for " + g.sample.id);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_synthetic_corpus <out-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);

  Rng rng;
  auto samples = make_samples(rng);

  std::vector<std::size_t> correct_att = bins_from_counts(kCorrectAtt, rng);
  std::vector<std::size_t> correct_non = bins_from_counts(kCorrectNonAtt, rng);
  std::vector<std::size_t> wrong_att = bins_from_counts(kWrongAtt, rng);
  std::vector<std::size_t> wrong_non = bins_from_counts(kWrongNonAtt, rng);

  agser::PipelineConfig config;
  std::map<std::string, std::string> answers;
  for (const auto& g : samples) answers[agser::normalize_whitespace(g.sample.question)] = g.original;

  nlohmann::ordered_json script = nlohmann::ordered_json::array();
  std::ofstream dataset(dir / "dataset.jsonl", std::ios::binary);
  std::size_t ci = 0, wi = 0;
  for (const auto& g : samples) {
    const std::size_t att_bin = g.correct ? correct_att[ci] : wrong_att[wi];
    const std::size_t non_bin = g.correct ? correct_non[ci++] : wrong_non[wi++];
    const Subqueries s = choose_split(g, config, answers, att_bin, non_bin, rng);

    nlohmann::ordered_json line;
    line["id"] = g.sample.id;
    line["question"] = g.sample.question;
    line["gold_answer"] = g.sample.gold_answer;
    line["domain"] = to_string(g.sample.domain);
    dataset << line.dump() << '\n';

    script.push_back({{"match", g.sample.question},
                      {"answer", g.original},
                      {"attention_pattern", s.pattern.str()},
                      {"variants", variants_for(g, rng)}});
    for (const auto& [key, bin] : {std::pair{s.attentive, att_bin}, std::pair{s.non_attentive, non_bin}}) {
      if (answers.count(key)) continue;
      answers[key] = answer_in_bin(g, bin, rng);
      script.push_back({{"match", key}, {"answer", answers[key]}, {"attention_pattern", "uniform"}});
    }
  }
  dataset.close();
  {
    std::ofstream out(dir / "script.json", std::ios::binary);
    out << script.dump(1) << '\n';
  }

  agser::EvalOptions options;
  options.compare_resample = true;
  agser::ScriptedBackend backend(agser::ScriptTable::load((dir / "script.json").string()));
  const auto report =
      agser::evaluate(agser::load_dataset((dir / "dataset.jsonl").string()), options, backend);
  std::cout << agser::format_report_summary(report);
  return 0;
}
