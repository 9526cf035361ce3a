#include "memctx/error.hpp"

namespace memctx {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_pose: return "invalid-pose";
    case ErrorKind::invalid_grid: return "invalid-grid";
    case ErrorKind::degenerate_target: return "degenerate-target";
    case ErrorKind::degenerate_descriptor: return "degenerate-descriptor";
    case ErrorKind::invalid_slab: return "invalid-slab";
    case ErrorKind::task_mismatch: return "task-mismatch";
    case ErrorKind::io: return "io";
    case ErrorKind::load: return "load";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace memctx
