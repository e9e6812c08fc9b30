#include "fsur/cli.hpp"

int main(int argc, char** argv) { return fsur::cli::dispatch(argc, argv); }
