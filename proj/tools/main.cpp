#include "flexamg/cli.hpp"

int main(int argc, char **argv) { return flexamg::run_cli(argc, argv); }
