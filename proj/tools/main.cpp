#include "easlab/cli/run.hpp"

int main(int argc, char** argv) { return easlab::cli::run(argc, argv); }
