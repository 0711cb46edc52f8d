#include "gprism/cli/commands.hpp"

int main(int argc, char** argv) { return gprism::cli::run(argc, argv); }
