#pragma once

namespace kgr {

// Build identity stamped into manifests and checkpoints-adjacent artifacts.
inline constexpr const char* kVersionTag = "kgr-0.1.0";

}  // namespace kgr
