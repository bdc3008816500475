#include <iostream>

#include "cnas/cli.hpp"

int main(int argc, char** argv) { return cnas::run_cli(argc, argv, std::cout, std::cerr); }
