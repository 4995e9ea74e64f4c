#include <iostream>

#include "peacelens/cli.hpp"

int main(int argc, char** argv) { return peacelens::cli::run(argc, argv, std::cout, std::cerr); }
