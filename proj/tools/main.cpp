#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return rtp_arb::cli::run(argc, argv, std::cout, std::cerr); }
