#include "lznet/cli.hpp"

int main(int argc, char** argv) { return lznet::cli::run(argc, argv); }
