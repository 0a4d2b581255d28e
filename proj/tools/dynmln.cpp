#include "dynmln/cli.hpp"

int main(int argc, char** argv) { return dynmln::cli::run(argc, argv); }
