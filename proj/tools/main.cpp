#include <iostream>

#include "partibandits/cli.hpp"

int main(int argc, char** argv) { return pb::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
