#include "cli.hpp"

int main(int argc, char **argv) { return mobdemo::cli::main_entry(argc, argv); }
