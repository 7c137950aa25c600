#pragma once

namespace pso {

// Keeps freed heap blocks in the process instead of returning them to the OS. Training allocates
// the same multi-megabyte temporaries every iteration, and fresh pages are costly to fault in.
// No-op outside glibc. Call once, early in main.
void retain_heap_memory();

}  // namespace pso
