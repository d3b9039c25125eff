#include "crayon/cli/app.hpp"

int main(int argc, char** argv) { return crayon::cli::run(argc, argv); }
