// SPDX-License-Identifier: Apache-2.0
#include "o3aed/cli.hpp"

int main(int argc, char** argv) { return o3aed::cli::run(argc, argv); }
