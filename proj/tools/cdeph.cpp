#include "cli.hpp"

int main(int argc, char** argv) { return cdeph::cli::run(argc, argv); }
