#include "msk3/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace msk3 {

namespace {

std::mutex plan_mutex;
std::map<std::pair<int, int>, fftw_plan> plan_cache;

fftw_plan get_plan(int n, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_pair(n, sign);
  auto it = plan_cache.find(key);
  if (it != plan_cache.end()) return it->second;
  // FFTW_UNALIGNED lets the plan execute on arbitrary user buffers later.
  std::vector<cd> a(n), b(n);
  fftw_plan p = fftw_plan_dft_1d(
      n, reinterpret_cast<fftw_complex*>(a.data()),
      reinterpret_cast<fftw_complex*>(b.data()), sign,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_cache.emplace(key, p);
  return p;
}

void run(std::span<const cd> in, std::span<cd> out, int sign) {
  const int n = static_cast<int>(in.size());
  require(n > 0 && out.size() == in.size(), "fft buffers must match and be non-empty");
  require(in.data() != out.data(), "fft input and output must not alias");
  fftw_plan p = get_plan(n, sign);
  fftw_execute_dft(p,
                   reinterpret_cast<fftw_complex*>(const_cast<cd*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& x : out) x *= s;
}

}  // namespace

void fft_forward(std::span<const cd> in, std::span<cd> out) {
  run(in, out, FFTW_FORWARD);
}

void fft_inverse(std::span<const cd> in, std::span<cd> out) {
  run(in, out, FFTW_BACKWARD);
}

std::vector<cd> fft_forward(std::span<const cd> in) {
  std::vector<cd> out(in.size());
  fft_forward(in, out);
  return out;
}

std::vector<cd> fft_inverse(std::span<const cd> in) {
  std::vector<cd> out(in.size());
  fft_inverse(in, out);
  return out;
}

}  // namespace msk3
