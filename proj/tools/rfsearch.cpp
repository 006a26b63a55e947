#include "rfsearch/cli.hpp"

int main(int argc, char** argv) { return rfsearch::run_cli(argc, argv); }
