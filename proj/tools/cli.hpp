#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dbevo::cli {

/// Runs one command. `args` excludes the program name. Returns 0 on success,
/// 2 for usage errors (nothing is written) and 1 for analysis errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dbevo::cli
