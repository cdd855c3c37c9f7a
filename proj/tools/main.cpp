// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "metaconcept/cli.hpp"

int main(int argc, char** argv) { return metaconcept::run_cli(argc, argv, std::cout, std::cerr); }
