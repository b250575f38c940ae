#include <iostream>

#include "strongorbit/cli.hpp"

int main(int argc, char** argv) { return strongorbit::run_cli(argc, argv, std::cout, std::cerr); }
