#include "bench_driver.hpp"

int main(int argc, char** argv) { return hp1bench::run_cli(argc, argv); }
