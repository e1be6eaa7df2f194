#include "cli.hpp"

int main(int argc, char **argv) { return latflow::run_cli(argc, argv); }
