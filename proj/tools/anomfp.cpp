#include "anomfp/cli.hpp"

int main(int argc, char** argv) { return anomfp::cli::run(argc, argv); }
