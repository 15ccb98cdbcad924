#include "cli.hpp"

int main(int argc, char** argv) { return tsquant::cli::run(argc, argv); }
