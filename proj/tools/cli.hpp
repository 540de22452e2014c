#pragma once

#include <iosfwd>

namespace kgalign {

// Sub-commands: align, paris-only, eval, synth.
// Returns 0 on success, 2 on usage or configuration errors, 1 on runtime errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kgalign
