// SPDX-License-Identifier: Apache-2.0

#include "chgen/cli.hpp"

int main(int argc, char** argv) { return chgen::cli::run(argc, argv); }
