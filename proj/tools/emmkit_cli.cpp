#include "emmkit/cli.hpp"

int main(int argc, char** argv) { return emmkit::cli::run(argc, argv); }
