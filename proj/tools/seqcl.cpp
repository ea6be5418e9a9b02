#include "seqcl/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return seqcl::dispatch(argc, argv, std::cout, std::cerr);
}
