#include "replayirl/cli.hpp"

int main(int argc, char** argv) { return replayirl::cli::main(argc, argv); }
