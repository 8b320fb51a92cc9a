// Writes the bundled synthetic corpus.
#include <cstdlib>
#include <iostream>
#include <string>

#include "vuldetect/data/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 4) {
    std::cerr << "usage: make_corpus OUTPUT [COUNT] [SEED]\n";
    return 1;
  }
  const std::size_t count = argc > 2 ? std::stoul(argv[2]) : 2000;
  const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 2024;
  try {
    vuldetect::data::save_dataset(vuldetect::data::synthetic_corpus(count, seed), argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
