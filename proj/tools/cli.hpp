#pragma once

namespace uniflg::cli {

/// Entry point of the `uniflg` tool. Returns the process exit code:
/// 0 on success, 1 on a runtime failure, CLI11's code on a usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace uniflg::cli
