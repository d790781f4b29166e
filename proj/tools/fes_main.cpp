#include "fes/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return fes::run_cli(argc, argv, std::cout, std::cerr);
}
