#include "faceblur_cli.hpp"

int main(int argc, char** argv) { return faceblur::cli::main_entry(argc, argv); }
