#include <string>
#include <vector>

#include "fracdiff/cli.hpp"

int main(int argc, char** argv) {
    return fracdiff::run_tool(std::vector<std::string>(argv + 1, argv + argc));
}
