#include "ampere/cli.hpp"

int main(int argc, char** argv) { return ampere::run_command(argc, argv); }
