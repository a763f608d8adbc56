// Compares the serial reference trial loop against the OpenMP runner on a
// representative link workload and verifies the results are bit identical.
#include <chrono>
#include <cstring>
#include <iostream>

#include "msk3/experiment.hpp"

using namespace msk3;

namespace {

double time_run(const ExperimentSpec& spec, ExecMode mode, ResultRecord& rec) {
  const auto t0 = std::chrono::steady_clock::now();
  rec = run_experiment(spec, mode);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool identical(const ResultRecord& a, const ResultRecord& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    if (a.rows[r].size() != b.rows[r].size()) return false;
    if (std::memcmp(a.rows[r].data(), b.rows[r].data(),
                    a.rows[r].size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int trials = argc > 1 ? std::atoi(argv[1]) : 32;

  json cfg = {
      {"waveform",
       {{"k", 24}, {"l", 2}, {"n", 256}, {"n_cp", 18}, {"a", 0.05},
        {"cp_continuity", true}, {"symbol_continuity", true}}},
      {"detector", {{"lambda", 0.05}}},
      {"sweep", {{"axis", "snr_db"}, {"values", {4.0, 8.0}}}},
      {"trials", trials},
      {"frames_per_trial", 40},
      {"seed", 99},
  };
  ExperimentSpec spec = parse_experiment(cfg, ExperimentKind::Link);

  ResultRecord serial, parallel;
  const double ts = time_run(spec, ExecMode::Serial, serial);
  const double tp = time_run(spec, ExecMode::Parallel, parallel);

  std::cout << "link workload: " << trials << " trials x "
            << cfg["frames_per_trial"].get<int>() << " frames, 2 SNR points\n";
  std::cout << "  serial   " << ts << " s\n";
  std::cout << "  parallel " << tp << " s  (speedup " << ts / tp << "x)\n";
  if (!identical(serial, parallel)) {
    std::cout << "MISMATCH: parallel results differ from the serial reference\n";
    return 1;
  }
  std::cout << "results bit identical\n";
  return 0;
}
