// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/commands.hpp"

int main(int argc, char** argv) { return draftsel::run_cli(argc, argv); }
