#pragma once

#include <string>
#include <vector>

namespace linksched::cli {

/// Entry point shared by the executable and the CLI tests. Returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace linksched::cli
