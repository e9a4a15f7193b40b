#include <string>
#include <vector>
#include <gknock/cli.hpp>

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return gknock::cli::run(args);
}
