#include "cli_app.hpp"

int main(int argc, char** argv) { return copulacp::cli::run(argc, argv); }
