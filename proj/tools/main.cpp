#include "commands.hpp"

int main(int argc, char **argv) { return nlos::cli::run(argc, argv); }
