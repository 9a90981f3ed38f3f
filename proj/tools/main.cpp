#include "co2grav/cli.hpp"

int main(int argc, char** argv) { return co2grav::cli::run(argc, argv); }
