#include "cli.hpp"

int main(int argc, char** argv) { return plada::cli::dispatch(argc, argv); }
