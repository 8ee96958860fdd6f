#include "exprec/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace exprec::fft {
namespace {

// Plans are created with FFTW_ESTIMATE so the chosen algorithm (and therefore
// every output bit) does not depend on timing measurements.
class PlanCache {
public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int P, int Q, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(P, Q, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cx> scratch(static_cast<std::size_t>(P) * Q);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(P, Q, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) fail(Errc::internal, "fftw plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run(std::span<cx> frame, int P, int Q, int sign) {
  require(frame.size() == static_cast<std::size_t>(P) * Q, Errc::shape_mismatch, "fft frame size");
  auto* buf = reinterpret_cast<fftw_complex*>(frame.data());
  fftw_execute_dft(cache().get(P, Q, sign), buf, buf);
}

void scale(std::span<cx> frame, double s) {
  for (auto& v : frame) v *= s;
}

}  // namespace

void forward(std::span<cx> frame, int P, int Q) { run(frame, P, Q, FFTW_FORWARD); }
void backward(std::span<cx> frame, int P, int Q) { run(frame, P, Q, FFTW_BACKWARD); }

void forward_unitary(std::span<cx> frame, int P, int Q) {
  forward(frame, P, Q);
  scale(frame, 1.0 / std::sqrt(static_cast<double>(P) * Q));
}

void inverse_unitary(std::span<cx> frame, int P, int Q) {
  backward(frame, P, Q);
  scale(frame, 1.0 / std::sqrt(static_cast<double>(P) * Q));
}

}  // namespace exprec::fft
