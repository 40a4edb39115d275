#include <iostream>

#include "flowbench/cli.hpp"

int main(int argc, char** argv) { return flowbench::cli::run(argc, argv, std::cout, std::cerr); }
