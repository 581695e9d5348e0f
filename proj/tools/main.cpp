#include <iostream>

#include "qcsum_cli.hpp"

int main(int argc, char** argv) { return qcsum::cli::main_entry(argc, argv, std::cout, std::cerr); }
