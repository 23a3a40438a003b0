#include "modadd/cli.hpp"

int main(int argc, char** argv) {
    return modadd::run_cli(argc, argv);
}
