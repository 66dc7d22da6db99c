#include "projnorm/cli.hpp"

int main(int argc, char** argv) { return projnorm::cli::run(argc, argv); }
