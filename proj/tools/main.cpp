#include <iostream>

#include "viewconsist/cli.hpp"

int main(int argc, char** argv) { return viewconsist::run_cli(argc, argv, std::cout, std::cerr); }
