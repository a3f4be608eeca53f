#include "mloc/cli.hpp"

int main(int argc, char** argv) { return mloc::cli::cli_main(argc, argv); }
