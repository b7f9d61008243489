#pragma once

namespace lznet::cli {

/// Entry point behind the lznet binary; also callable in-process from
/// tests. Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int run(int argc, const char* const* argv);

}  // namespace lznet::cli
