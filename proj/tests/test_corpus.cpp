#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::path(AGSER_BINARY_DIR) / "scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_shell(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

}  // namespace

TEST_CASE("the synthetic corpus regenerates byte for byte") {
  const auto dir = scratch_dir("corpus");
  REQUIRE(run_shell(std::string("\"") + CORPUS_TOOL + "\" \"" + dir.string() + "\"") == 0);
  for (const char* name : {"dataset.jsonl", "script.json"})
    CHECK(read_bytes(dir / name) == read_bytes(testing::source_path(std::string("data/synthetic/") + name)));
}

TEST_CASE("the reference weights regenerate byte for byte") {
  const auto dir = scratch_dir("weights");
  const auto out = dir / "weights.bin";
  REQUIRE(run_shell(std::string("\"") + WEIGHTS_TOOL + "\" \"" + out.string() + "\"") == 0);
  CHECK(read_bytes(out) == read_bytes(testing::source_path("assets/reference-weights.bin")));
}
