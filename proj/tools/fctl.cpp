#include "fctl/cli.hpp"

int main(int argc, char** argv) { return fctl::cli::main(argc, argv); }
