#include "kkps/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return kkps::run_cli(argc, argv, std::cout, std::cerr);
}
