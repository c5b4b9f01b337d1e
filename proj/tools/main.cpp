#include <iostream>

#include "anglekv/cli.hpp"

int main(int argc, char** argv) { return anglekv::cli::run(argc, argv, std::cout, std::cerr); }
