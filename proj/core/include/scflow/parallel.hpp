#pragma once

namespace scflow {

/// Caps the worker threads used by per-node passes; 0 restores the default.
void set_thread_limit(int threads);

/// Threads a parallel pass would currently use (1 without OpenMP).
int thread_limit();

}  // namespace scflow
