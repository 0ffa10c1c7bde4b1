#include <iostream>

#include "nlab/cli.hpp"

int main(int argc, char** argv)
{
    return nlab::cli::main(argc, argv, std::cout, std::cerr);
}
