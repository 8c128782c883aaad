#include "gcgm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gcgm::run_cli(argc, argv, std::cout, std::cerr); }
