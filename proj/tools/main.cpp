/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include <iostream>
#include <string>
#include <vector>

#include "extcal/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return extcal::cli_main(args, std::cout, std::cerr);
}
