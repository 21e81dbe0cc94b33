#include <iostream>

#include "colorfuse/cli.hpp"

int main(int argc, char** argv) { return colorfuse::run_cli(argc, argv, std::cout, std::cerr); }
