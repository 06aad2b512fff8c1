#include "cesplan/cli.hpp"

int main(int argc, char** argv) { return cesplan::cli::dispatch(argc, argv); }
