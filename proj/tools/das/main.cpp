#include <iostream>

#include "das/commands.hpp"

int main(int argc, char** argv) { return das::cli::run(argc, argv, std::cout, std::cerr); }
