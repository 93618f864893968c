#include "brushrecon/cli.hpp"

int main(int argc, char** argv) { return brushrecon::run_cli(argc, argv); }
