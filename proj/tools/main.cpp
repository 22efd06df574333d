#include "cli.hpp"

int main(int argc, char** argv) { return dapce::cli::run(argc, argv); }
