#include "sarhcox/cli.hpp"

int main(int argc, char** argv) { return sarhcox::cli::run(argc, argv); }
