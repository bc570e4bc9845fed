#include <iostream>

#include "wpinn/cli.hpp"

int main(int argc, char** argv) { return wpinn::cli::run(argc, argv, std::cout, std::cerr); }
