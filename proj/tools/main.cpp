#include "cli.hpp"

int main(int argc, char** argv) { return rdfl::cli::run_cli(argc, argv); }
