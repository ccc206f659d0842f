#pragma once

namespace nbtc {

/// Selects the serial reference loop or the OpenMP loop for a kernel.
/// Both produce bit-identical results; the serial path is kept for testing
/// and benchmarking.
enum class Exec { Serial, Parallel };

/// Applies the NBTC_THREADS environment variable (0 or unset = runtime
/// default) to the OpenMP runtime. Safe to call more than once.
void configure_threads_from_env();

/// Number of threads a parallel region will use.
int max_threads();

}  // namespace nbtc
