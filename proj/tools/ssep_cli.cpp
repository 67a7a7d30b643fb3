#include <ssep/harness/cli.hpp>

int main(int argc, char** argv) { return ssep::harness::cli_dispatch(argc, argv); }
