#include "liesde/cli.hpp"

int main(int argc, char** argv) { return liesde::cli::run(argc, argv); }
