#include "exprec/error.hpp"

namespace exprec {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::non_finite: return "non-finite value";
    case Errc::bad_magic: return "bad magic";
    case Errc::truncated: return "truncated file";
    case Errc::payload_size_mismatch: return "payload size mismatch";
    case Errc::io: return "i/o error";
    case Errc::config: return "configuration error";
    case Errc::eigen_failure: return "eigensolver failure";
    case Errc::not_psd: return "matrix not positive semidefinite";
    case Errc::cg_divergence: return "conjugate gradient divergence";
    case Errc::size_guard: return "size guard exceeded";
    case Errc::internal: return "internal error";
  }
  return "unknown error";
}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace exprec
