#include <exception>
#include <iostream>

#include "tddsim/cli.hpp"

int main(int argc, char** argv) {
    try {
        return tddsim::run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 3;
    }
}
