#include <iostream>

#include "videograph/cli.hpp"

int main(int argc, char** argv) { return videograph::run_cli(argc, argv, std::cout, std::cerr); }
