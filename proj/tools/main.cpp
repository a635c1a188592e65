#include "geonum/cli.hpp"

int main(int argc, char** argv) { return geonum::cli::parse_and_dispatch(argc, argv); }
