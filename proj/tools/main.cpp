#include "cli_app.hpp"

int main(int argc, char** argv) { return nesteq::cli::run(argc, argv); }
