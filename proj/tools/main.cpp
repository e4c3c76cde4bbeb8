#include "isingep/commands.hpp"

int main(int argc, char** argv) { return isingep::run_cli(argc, argv); }
