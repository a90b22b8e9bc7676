#include <string>
#include <vector>

#include "dpar/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dpar::cli::run(args);
}
