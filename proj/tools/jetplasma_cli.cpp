#include <iostream>

#include "jetplasma/cli.hpp"

int main(int argc, char** argv) { return jetplasma::cli::run(argc, argv, std::cout, std::cerr); }
