#pragma once

namespace atl {

/// Worker count for parallel regions: set_worker_threads() if called, else the
/// ATL_THREADS environment variable, else every available core.
int worker_threads();

/// Overrides ATL_THREADS for this process. n <= 0 restores the default.
void set_worker_threads(int n);

}  // namespace atl
