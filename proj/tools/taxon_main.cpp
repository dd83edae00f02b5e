#include "taxon/cli.hpp"

int main(int argc, char** argv) { return taxon::cli::run(argc, argv); }
