#include "runner.hpp"

int main(int argc, char** argv) { return opocat::cli::run_main(argc, argv); }
