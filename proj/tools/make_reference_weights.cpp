// Writes the reference transformer weights asset.
//
//   make_reference_weights <out-file> [seed]

#include <cstdint>
#include <iostream>
#include <string>

#include "agser/backend.hpp"
#include "agser/reference_model.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: make_reference_weights <out-file> [seed]\n";
    return 2;
  }
  const std::uint64_t seed = argc == 3 ? std::stoull(argv[2]) : agser::kReferenceWeightSeed;
  agser::ModelWeights::generate(seed).save(argv[1]);
  return 0;
}
