#include "simarr/cli.hpp"

int main(int argc, char** argv) { return simarr::dispatch(argc, argv); }
