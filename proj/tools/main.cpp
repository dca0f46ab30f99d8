#include <iostream>
#include <string>
#include <vector>

#include "mardiflow/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mardiflow::run_app(args, std::cout, std::cerr);
}
