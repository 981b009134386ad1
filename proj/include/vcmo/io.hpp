#pragma once

#include <functional>
#include <ostream>
#include <string>

namespace vcmo {

// Full-precision decimal formatting used for every numeric CSV field; the
// fixed format keeps identical runs byte-identical.
std::string format_double(double v);

// Writes through a temp file in the same directory, renaming on success, so
// no partially written data file can remain after a failure.
void atomic_write_file(const std::string& path,
                       const std::function<void(std::ostream&)>& writer);

}  // namespace vcmo
