#include "multibump/cli.hpp"

int main(int argc, char** argv) { return multibump::cli::run(argc, argv); }
