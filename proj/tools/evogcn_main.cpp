#include "evogcn/cli.hpp"

int main(int argc, char** argv) { return evogcn::run_cli(argc, argv); }
