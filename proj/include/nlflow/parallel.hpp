#pragma once

namespace nlflow {

/// Applies NLFLOW_THREADS (if set and positive) as the cap on data-parallel width.
/// Returns the thread count in effect; 1 when built without OpenMP.
int configure_threads();
int max_threads();

} // namespace nlflow
