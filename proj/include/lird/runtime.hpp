#pragma once

#include <malloc.h>

namespace lird {

/// Keeps freed heap memory mapped. Training allocates and frees the same
/// few-hundred-KB Eigen temporaries every update; with glibc's default trim
/// and mmap thresholds each of those costs fresh page faults.
inline void configure_allocator() {
#ifdef M_TRIM_THRESHOLD
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
#endif
}

}  // namespace lird
