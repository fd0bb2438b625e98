#include "cli.hpp"

int main(int argc, char** argv) { return bswrm::cli::run(argc, argv); }
