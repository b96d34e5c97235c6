#include "cli.hpp"

int main(int argc, char** argv) { return despeckle::cli::dispatch(argc, argv); }
