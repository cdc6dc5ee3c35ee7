#include "drc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return drc::run_command(argc, argv, std::cout, std::cerr); }
