// Command-line front end. Subcommands are registered in cli.cpp as the
// library modules they exercise come online.
#include "cli.hpp"

int main(int argc, char** argv) { return gudg::cli_main(argc, argv); }
