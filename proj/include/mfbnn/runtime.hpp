#pragma once

namespace mfbnn {

/// Keeps large freed blocks in the heap instead of returning them to the OS, so the
/// per-step activation matrices are not page-faulted in afresh on every iteration.
/// A no-op outside glibc. Call once at startup, before any heavy allocation.
void keep_large_allocations();

}  // namespace mfbnn
