#include "lampp/cli.hpp"

int main(int argc, char** argv) { return lampp::cli::run(argc, argv); }
