#include "demo/cli.hpp"

int main(int argc, char** argv) { return demo::cli::run(argc, argv); }
