#include "lka/cli.hpp"

int main(int argc, char** argv) { return lka::cli::run(argc, argv); }
