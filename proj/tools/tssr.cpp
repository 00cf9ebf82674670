#include "tssr/cli/commands.hpp"

int main(int argc, char** argv) { return tssr::cli::run(argc, argv); }
