#include "jmcert/cli.hpp"

int main(int argc, char** argv) { return jmcert::cli::run(argc, argv); }
