#include "cli.hpp"

int main(int argc, char** argv) { return gmner::cli::run_cli(argc, argv); }
