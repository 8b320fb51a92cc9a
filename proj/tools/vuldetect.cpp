#include "cli.hpp"

int main(int argc, char** argv) {
  vuldetect::cli::tune_allocator();
  return vuldetect::cli::cli_main(argc, argv);
}
