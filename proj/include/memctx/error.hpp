#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace memctx {

enum class ErrorKind {
  invalid_argument,
  invalid_pose,
  invalid_grid,
  degenerate_target,
  degenerate_descriptor,
  invalid_slab,
  task_mismatch,
  io,
  load,
  config,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Domain error raised by every module. `module` names the component that
// rejected the input so the CLI can report it on one line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

}  // namespace memctx
