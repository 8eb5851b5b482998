#include "cli.hpp"

int main(int argc, char** argv) { return vcnet::cli::run(argc, argv); }
