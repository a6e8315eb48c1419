/**
 * @file engine.cpp
 * @brief `engine boundary|price|greeks|oracle-compare --config <path>`
 */

#include <iostream>
#include <string>
#include <vector>

#include "eeb/cli.hpp"

int main(int argc, char** argv) {
    return eeb::engine_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
