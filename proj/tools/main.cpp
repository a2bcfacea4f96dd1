#include <iostream>

#include "sumrules/cli.hpp"

int main(int argc, char** argv) { return sumrules::cli::run(argc, argv, std::cout, std::cerr); }
