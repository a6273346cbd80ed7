#include <iostream>

#include "lresp/app.hpp"

int main(int argc, char** argv) { return lresp::run_cli(argc, argv, std::cout, std::cerr); }
