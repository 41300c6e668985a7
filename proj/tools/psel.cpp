#include <psel/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return psel::run_cli(argc, argv, std::cout, std::cerr); }
