#include <string>
#include <vector>

#include "neumann/cli.hpp"

int main(int argc, char** argv)
{
    return neumann::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
