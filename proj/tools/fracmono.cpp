#include "cli/commands.hpp"

int main(int argc, char** argv) { return fracmono::cli::main_entry(argc, argv); }
