// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "drumsep/cli/commands.hpp"

int main(int argc, char** argv) { return drumsep::cli::run(argc, argv); }
