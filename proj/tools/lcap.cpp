#include "cli.hpp"

int main(int argc, char** argv) { return lcap::cli::run(argc, argv); }
