#include "fmmbeat/cli.h"

#include <iostream>

int main(int argc, char** argv) { return fmmbeat::run_cli(argc, argv, std::cout, std::cerr); }
