#include "refergate/cli.hpp"

int main(int argc, char** argv) { return refergate::run_cli(argc, argv); }
