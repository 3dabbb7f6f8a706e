#pragma once

#include <functional>

namespace dimpim {

// Run body(i) for i in [0, n) on up to `threads` workers (0 = all hardware
// threads).  Iterations must write only to their own output slots; the first
// exception thrown by any iteration is rethrown on the calling thread.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

// Number of workers that parallel_for would actually use.
int resolve_threads(int threads);

}  // namespace dimpim
