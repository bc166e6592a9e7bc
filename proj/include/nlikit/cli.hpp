#pragma once

#include <string>
#include <vector>

namespace nlikit::cli {

// Full command-line entry point, callable in-process for tests.
// Exit codes: 0 success, 1 validation/invariant failure, 2 config error,
// 3 external-service failure.
int cli_main(const std::vector<std::string>& args);

} // namespace nlikit::cli
