#include "cli.hpp"

int main(int argc, char** argv) { return uniflg::cli::run_cli(argc, argv); }
