#include "morin/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return morin::cli::run(argc, argv, std::cout, std::cerr); }
