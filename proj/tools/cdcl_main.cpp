#include "cdcl/cli.hpp"

int main(int argc, char** argv) { return cdcl::run_cli(argc, argv); }
