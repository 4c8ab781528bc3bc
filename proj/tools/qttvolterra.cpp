#include "qttv/cli.hpp"

int main(int argc, char** argv) { return qttv::cli::main(argc, argv); }
