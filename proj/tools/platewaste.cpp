#include "cli.hpp"

int main(int argc, char** argv) { return platewaste::cli::run(argc, argv); }
