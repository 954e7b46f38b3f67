#include "hewe/cli.hpp"

int main(int argc, char** argv) { return hewe::run_cli(argc, argv); }
