#include "iontrap/commands.hpp"

int main(int argc, char** argv) {
    return iontrap::cli::run(argc, argv);
}
