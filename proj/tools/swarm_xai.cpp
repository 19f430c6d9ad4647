#include "swarmxai/cli.hpp"

int main(int argc, char** argv) { return swarmxai::run_cli(argc, argv); }
