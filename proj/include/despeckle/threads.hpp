#pragma once

namespace despeckle {

/// Caps the worker count of pixel-parallel loops (no-op without OpenMP).
void set_thread_limit(int threads);
int thread_limit();

}  // namespace despeckle
