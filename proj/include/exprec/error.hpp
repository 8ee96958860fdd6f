#pragma once

#include <stdexcept>
#include <string>

namespace exprec {

enum class Errc {
  invalid_argument = 1,
  shape_mismatch,
  non_finite,
  bad_magic,
  truncated,
  payload_size_mismatch,
  io,
  config,
  eigen_failure,
  not_psd,
  cg_divergence,
  size_guard,
  internal,
};

const char* errc_name(Errc code) noexcept;

/// Exception carrying a machine-readable error kind; the C ABI maps `code()`
/// onto its status enum.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace exprec
