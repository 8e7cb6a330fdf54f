#include "simdec/cli/commands.hpp"

int main(int argc, char** argv) { return simdec::cli::run_cli(argc, argv); }
