// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#include <iostream>

#include "gftlatent/cli.hpp"

int main(int argc, char** argv) { return gftl::cli::run(argc, argv, std::cout, std::cerr); }
