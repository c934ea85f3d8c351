// SPDX-License-Identifier: Apache-2.0
#include "sea/cli.hpp"

int main(int argc, char** argv) { return sea::cli_main(argc, argv); }
