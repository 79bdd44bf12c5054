#include <iostream>

#include "oracleloom/cli.hpp"

int main(int argc, char** argv) { return oracleloom::cli::run(argc, argv, std::cout, std::cerr); }
