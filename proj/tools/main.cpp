#include "cli.hpp"

int main(int argc, char** argv) { return ctrlcost::cli::run(argc, argv); }
