#include "supervisim/cli.hpp"

int main(int argc, char** argv) { return supervisim::cli::dispatch(argc, argv); }
