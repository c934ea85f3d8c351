// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace sea {

/// Entry point of the `sea` tool. Returns 0 on success, 1 on runtime
/// failure and 2 on usage errors.
int cli_main(int argc, const char* const* argv);

}  // namespace sea
