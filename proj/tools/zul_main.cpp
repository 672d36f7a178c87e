#include "zul/cli.hpp"

int main(int argc, char** argv) {
  return zul::run_cli(argc, argv);
}
