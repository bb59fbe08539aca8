#include "cidag/cli.hpp"

int main(int argc, char** argv) { return cidag::run_cli(argc, argv); }
