#include <vector>

#include "vcmo/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vcmo::run_command(args);
}
