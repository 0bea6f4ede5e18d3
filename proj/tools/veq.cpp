// SPDX-License-Identifier: MIT
#include "veq/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return veq::run_cli(argc, argv, std::cout, std::cerr); }
