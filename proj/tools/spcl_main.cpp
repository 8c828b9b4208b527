#include "spcl/cli.hpp"

int main(int argc, char** argv) { return spcl::cli::run_cli(argc, argv); }
