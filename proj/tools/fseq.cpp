#include "fseq/cli.hpp"

int main(int argc, char** argv) { return fseq::cli_main(argc, argv); }
