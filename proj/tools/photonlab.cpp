#include <iostream>

#include "photonlab/cli.hpp"

int main(int argc, char** argv) { return photonlab::run_cli(argc, argv, std::cout, std::cerr); }
