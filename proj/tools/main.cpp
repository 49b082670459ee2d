#include "cli.hpp"

int main(int argc, char** argv) { return regkit::cli::run(argc, argv); }
