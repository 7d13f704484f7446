#include <string>
#include <vector>

#include "pxfem/cli.hpp"

int main(int argc, char** argv) {
  return pxfem::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
