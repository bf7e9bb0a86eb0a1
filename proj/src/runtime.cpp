#include "mfbnn/runtime.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace mfbnn {

void keep_large_allocations() {
#if defined(__GLIBC__)
  constexpr int kLimit = 1 << 30;
  mallopt(M_MMAP_THRESHOLD, kLimit);
  mallopt(M_TRIM_THRESHOLD, kLimit);
#endif
}

}  // namespace mfbnn
