#include <iostream>

#include "occa/cli.hpp"

int main(int argc, char** argv) { return occa::run_cli(argc, argv, std::cout, std::cerr); }
