// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "gnce/cli.hpp"

int main(int argc, char** argv) { return gnce::run_cli(argc, argv, std::cout, std::cerr); }
