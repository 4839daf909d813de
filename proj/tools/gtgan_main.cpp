#include "gtgan/cli.hpp"

int main(int argc, char** argv) { return gtgan::cli::main(argc, argv); }
