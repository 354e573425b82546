#include "fumo/cli.hpp"

int main(int argc, char** argv) { return fumo::run_cli(argc, argv); }
