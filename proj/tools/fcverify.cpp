#include "fcverify/cli.hpp"

int main(int argc, char** argv) { return fcv::cli::run(argc, argv); }
