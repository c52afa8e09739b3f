#include "commands.hpp"

int main(int argc, char** argv) { return inloop::cli::run(argc, argv); }
