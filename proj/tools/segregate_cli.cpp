#include "segregate/harness.hpp"

#include "acceptance_suite.hpp"

#include <iostream>
#include <numeric>

int main(int argc, char** argv)
{
    segregate::CliHooks hooks;
    hooks.verify_all = [](bool quick, int workers) {
        std::vector<int> ids(acceptance::criterion_count);
        std::iota(ids.begin(), ids.end(), 1);
        return acceptance::run_suite(ids, quick, workers, std::cout);
    };
    return segregate::run_cli(argc, argv, hooks);
}
