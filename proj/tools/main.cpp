#include <iostream>

#include "rcb/cli.hpp"

int main(int argc, char** argv) { return rcb::cli::run(argc, argv, std::cout, std::cerr); }
