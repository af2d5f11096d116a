#include "toruslab/cli.hpp"

int main(int argc, char** argv) { return toruslab::cli::run(argc, argv); }
