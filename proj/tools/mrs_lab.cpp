// SPDX-License-Identifier: Apache-2.0
#include "mrs_lab/cli.hpp"

int main(int argc, char** argv) { return mrs::cli::run(argc, argv); }
