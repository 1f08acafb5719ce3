#include "convergelab/cli.hpp"

int main(int argc, char** argv) { return convergelab::run(argc, argv); }
