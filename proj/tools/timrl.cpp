#include "timrl/cli/cli.hpp"

int main(int argc, char** argv) { return timrl::cli::run(argc, argv); }
