#pragma once

namespace fseq {

/// Command-line entry point. Exit codes: 0 success, 1 usage error,
/// 2 data error, 3 numerical failure.
int cli_main(int argc, char** argv);

}  // namespace fseq
