#include <iostream>

#include "releq/cli.hpp"

int main(int argc, char** argv) {
    return releq::run_cli(argc, argv, std::cout, std::cerr);
}
