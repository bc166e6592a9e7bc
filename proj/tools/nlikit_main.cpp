#include <string>
#include <vector>

#include "nlikit/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nlikit::cli::cli_main(args);
}
