#include "coord/cli.hpp"

int main(int argc, char** argv) { return coord::run_cli(argc, argv); }
