// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "stepcot/cli.hpp"

int main(int argc, char** argv) { return stepcot::cli::run(argc, argv, std::cout, std::cerr); }
