#include "collateral/cli.hpp"

int main(int argc, char** argv) { return collateral::run_cli(argc, argv); }
