#pragma once

namespace mloc::cli {

// Full command-line surface (generate | dimest | train | eval | track).
// Returns the process exit code: 0 success, 1 track objective not met,
// 2 validation error, 3 numerical error, 4 I/O error. Never calls exit(),
// so tests can invoke it in-process.
int cli_main(int argc, const char* const* argv);

}  // namespace mloc::cli
