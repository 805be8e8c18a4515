#include "cli.hpp"

int main(int argc, char** argv) { return hpe::cli::run(argc, argv); }
