#pragma once

/// Entry point for the riskx command-line tool; returns the process exit
/// code (0 success, 2 usage or validation error, 3 numeric failure).
int run_cli(int argc, char** argv);
