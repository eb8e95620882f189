#include "dkf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dkf::run_cli(argc, argv, std::cout, std::cerr); }
