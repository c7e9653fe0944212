#include "rdmd_cli.hpp"

int main(int argc, char** argv) { return rdmd::cli::run(argc, argv); }
