#include <iostream>

#include "cqcovert/cli.hpp"

int main(int argc, char** argv) { return cqcovert::run_cli(argc, argv, std::cout, std::cerr); }
