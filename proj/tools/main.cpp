#include "supcbi/cli.hpp"

int main(int argc, char** argv) { return supcbi::cli::run_cli(argc, argv); }
