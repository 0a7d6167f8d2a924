#include "adherence/cli.hpp"

int main(int argc, char** argv) { return adherence::cli::run(argc, argv); }
