#pragma once
// Command-line front end, callable in-process so tests can drive every
// subcommand without spawning.
//
// Exit codes: 0 success, 1 validation failure (bad input file, bad flag
// combination, infeasible request), 2 solver non-convergence, 3 I/O failure.
//
// Every file-producing invocation writes "<output>.manifest" beside the
// output: flat key=value lines echoing the configuration, library version,
// wall time and headline result scalars. The manifest is written on failure
// paths too, with status/error keys.

#include <iosfwd>
#include <string>
#include <vector>

namespace recdual {

// args excludes the program name, e.g. {"solve", "m.model", "--out", "f.bin"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace recdual
