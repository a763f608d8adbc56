#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "msk3/fft.hpp"
#include "msk3/impairments.hpp"
#include "msk3/rng.hpp"
#include "test_util.hpp"

using namespace msk3;

TEST_CASE("awgn: positive-infinite SNR is a bitwise no-op") {
  std::vector<cd> x = {{1.5, -0.25}, {0.0, 2.0}};
  auto y = x;
  awgn_apply(y, std::numeric_limits<double>::infinity(), 42);
  CHECK(y[0] == x[0]);
  CHECK(y[1] == x[1]);
  CHECK_THROWS_AS(awgn_apply(y, std::numeric_limits<double>::quiet_NaN(), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(awgn_apply(y, -std::numeric_limits<double>::infinity(), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(awgn_apply(y, 10.0, 1, 0.0), std::invalid_argument);
}

TEST_CASE("awgn: seed controls the noise draw exactly") {
  std::vector<cd> a(64, cd(1, 1)), b(64, cd(1, 1)), c(64, cd(1, 1));
  awgn_apply(a, 6.0, 7);
  awgn_apply(b, 6.0, 7);
  awgn_apply(c, 6.0, 8);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("awgn: noise power matches the requested SNR against Es") {
  CHECK(awgn_noise_variance(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(awgn_noise_variance(10.0, 1.0) == doctest::Approx(0.1));
  CHECK(awgn_noise_variance(10.0, 2.0) == doctest::Approx(0.2));

  const std::size_t n = 1'000'000;
  std::vector<cd> x(n, cd(0, 0));
  awgn_apply(x, 10.0, 99, 2.0);  // n0 = 0.2
  double mean_re = 0.0, mean_im = 0.0, power = 0.0;
  for (const auto& v : x) {
    mean_re += v.real();
    mean_im += v.imag();
    power += sqnorm(v);
  }
  mean_re /= n;
  mean_im /= n;
  power /= n;
  CHECK(power == doctest::Approx(0.2).epsilon(0.01));
  CHECK(std::abs(mean_re) < 3e-3);
  CHECK(std::abs(mean_im) < 3e-3);
}

TEST_CASE("tdl: profile validation") {
  TdlProfile p;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);  // empty
  const double half = 10.0 * std::log10(0.5);
  p.delays = {0, 3};
  p.powers_db = {half, half};
  CHECK_NOTHROW(p.validate());  // two half-power taps sum to one
  p.powers_db = {half};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);  // length mismatch
  p.powers_db = {-1.0, -1.0};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);  // powers do not sum to 1
  p.delays = {0, -1};
  p.powers_db = {half, half};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);  // negative delay
}

TEST_CASE("tdl: a single full-power tap scales the signal by one flat gain") {
  TdlProfile p;
  p.delays = {0};
  p.powers_db = {0.0};
  std::vector<cd> x(3 * 32);
  Rng rng(5);
  for (auto& v : x) v = rng.cgaussian();
  auto res = tdl_apply(x, p, true, 17, 32, 16);
  REQUIRE(res.cfr.size() == 3);  // one response per frame
  for (std::size_t f = 0; f < 3; ++f) {
    const cd h = res.cfr[f][0];
    for (const auto& bin : res.cfr[f]) {
      CHECK(bin.real() == doctest::Approx(h.real()));
      CHECK(bin.imag() == doctest::Approx(h.imag()));
    }
    for (int i = 0; i < 32; ++i) {
      const cd want = h * x[f * 32 + i];
      CHECK(res.samples[f * 32 + i].real() == doctest::Approx(want.real()));
      CHECK(res.samples[f * 32 + i].imag() == doctest::Approx(want.imag()));
    }
  }
  // without block fading one draw covers the whole stream
  auto res1 = tdl_apply(x, p, false, 17, 32, 16);
  CHECK(res1.cfr.size() == 1);
}

TEST_CASE("tdl: frequency response is the plain DFT of the taps") {
  TdlProfile p;
  p.delays = {0, 2};
  p.powers_db = {10.0 * std::log10(0.5), 10.0 * std::log10(0.5)};
  std::vector<cd> x(16, cd(1, 0));
  auto res = tdl_apply(x, p, false, 3, 16, 8);
  REQUIRE(res.cfr.size() == 1);
  REQUIRE(res.cfr[0].size() == 8);

  // recover the taps from the head of the output: y[0] = h0*x[0],
  // y[2] = h0*x[2] + h1*x[0] with x identically one
  const cd h0 = res.samples[0];
  const cd h1 = res.samples[2] - res.samples[0];
  for (int b = 0; b < 8; ++b) {
    const cd want = h0 + h1 * std::polar(1.0, -two_pi * 2 * b / 8.0);
    CHECK(res.cfr[0][b].real() == doctest::Approx(want.real()));
    CHECK(res.cfr[0][b].imag() == doctest::Approx(want.imag()));
  }
  // leading samples exclude taps that would reach before the stream start
  CHECK(res.samples[1].real() == doctest::Approx(h0.real()));

  CHECK_THROWS_AS(tdl_apply(x, p, false, 3, 2, 8), std::invalid_argument);  // delay >= frame
  CHECK_THROWS_AS(tdl_apply(std::vector<cd>(15, cd(1, 0)), p, false, 3, 16, 8),
                  std::invalid_argument);  // not whole frames
}

TEST_CASE("tdl: mean channel power is normalized to one") {
  TdlProfile p;
  p.delays = {0, 1, 3};
  p.powers_db = {10.0 * std::log10(0.5), 10.0 * std::log10(0.3),
                 10.0 * std::log10(0.2)};
  CHECK_NOTHROW(p.validate());

  const int frames = 10000, flen = 8, nfft = 8;
  std::vector<cd> x(static_cast<std::size_t>(frames) * flen, cd(1, 0));
  auto res = tdl_apply(x, p, true, 23, flen, nfft);
  double acc = 0.0;
  for (const auto& h : res.cfr) {
    for (const auto& v : h) acc += sqnorm(v);
  }
  acc /= static_cast<double>(frames) * nfft;
  CHECK(acc == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("phase noise: wiener walk statistics") {
  PnModel pn;
  pn.kind = PnModel::Kind::Wiener;
  pn.linewidth_hz = 0.0;
  auto quiet = pn_generate(pn, 64, 1);
  for (double v : quiet) CHECK(v == 0.0);

  pn.linewidth_hz = 1e-4 / two_pi;  // step variance 1e-4 at fs = 1
  CHECK(pn.wiener_step_variance() == doctest::Approx(1e-4));
  const int n = 201, reps = 10000;
  double var_end = 0.0, lag_cov = 0.0, var_mid = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto tr = pn_generate(pn, n, 1000 + r);
    CHECK(tr[0] == 0.0);
    var_end += tr[n - 1] * tr[n - 1];
    var_mid += tr[100] * tr[100];
    lag_cov += tr[100] * tr[n - 1];
  }
  var_end /= reps;
  var_mid /= reps;
  lag_cov /= reps;
  CHECK(var_end == doctest::Approx(200 * 1e-4).epsilon(0.05));
  CHECK(var_mid == doctest::Approx(100 * 1e-4).epsilon(0.05));
  // increments are independent: cov(phi[m], phi[n]) = var(phi[min])
  CHECK(lag_cov == doctest::Approx(var_mid).epsilon(0.1));
}

TEST_CASE("phase noise: flat shaped psd integrates to the expected power") {
  PnModel pn;
  pn.kind = PnModel::Kind::ShapedPsd;
  pn.sample_rate_hz = 1e6;
  pn.psd = {{1e2, -80.0}, {1e5, -80.0}};  // flat -80 dBc/Hz one-sided
  // one-sided S = 2e-8 rad^2/Hz over fs/2 = 5e5 Hz -> variance 0.01
  const int n = 1 << 14;
  double var = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    auto tr = pn_generate(pn, n, 50 + r);
    for (double v : tr) var += v * v;
  }
  var /= static_cast<double>(reps) * n;
  CHECK(var == doctest::Approx(0.01).epsilon(0.05));

  // 6 dB quieter PSD -> a quarter of the variance
  pn.psd = {{1e2, -86.0}, {1e5, -86.0}};
  double var2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto tr = pn_generate(pn, n, 50 + r);
    for (double v : tr) var2 += v * v;
  }
  var2 /= static_cast<double>(reps) * n;
  CHECK(var / var2 == doctest::Approx(std::pow(10.0, 0.6)).epsilon(0.1));

  pn.psd = {{1e5, -80.0}, {1e2, -80.0}};  // frequencies must increase
  CHECK_THROWS_AS(pn.validate(), std::invalid_argument);
  pn.psd.clear();
  CHECK_THROWS_AS(pn.validate(), std::invalid_argument);
  pn.kind = PnModel::Kind::Wiener;
  pn.sample_rate_hz = 0.0;
  CHECK_THROWS_AS(pn.validate(), std::invalid_argument);
}

TEST_CASE("phase noise application rotates samples without amplitude change") {
  std::vector<cd> x = {{1, 0}, {0, 2}, {-3, 1}};
  const std::vector<double> phi = {0.0, half_pi, 0.25};
  auto y = x;
  pn_apply(y, phi);
  CHECK(y[0] == x[0]);
  CHECK(y[1].real() == doctest::Approx(-2.0));
  CHECK(y[1].imag() == doctest::Approx(0.0).scale(1.0));
  CHECK(std::abs(y[2]) == doctest::Approx(std::abs(x[2])));
  CHECK(std::arg(y[2] * std::conj(x[2])) == doctest::Approx(0.25));
}

TEST_CASE("rapp model: linear floor, hard ceiling, monotone in between") {
  PaModel pa;  // modified Rapp, gain 1, vsat 1, p = 2
  CHECK(pa.am_am(1e-3) == doctest::Approx(1e-3).epsilon(1e-3));
  CHECK(pa.am_am(1e3) == doctest::Approx(pa.vsat).epsilon(1e-3));
  double prev = 0.0;
  for (double a = 0.05; a < 5.0; a += 0.05) {
    const double v = pa.am_am(a);
    CHECK(v > prev);
    CHECK(v <= pa.vsat + 1e-12);
    prev = v;
  }
  // smoothness parameter: smaller p compresses earlier
  PaModel soft = pa;
  soft.p = 1.0;
  CHECK(soft.am_am(1.0) < pa.am_am(1.0));

  // gain scales the small-signal slope, vsat the ceiling
  PaModel big = pa;
  big.gain = 4.0;
  big.vsat = 2.0;
  CHECK(big.am_am(1e-4) == doctest::Approx(4e-4).epsilon(1e-3));
  CHECK(big.am_am(1e3) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(big.input_sat() == doctest::Approx(0.5));

  CHECK_THROWS_AS([] { PaModel m; m.gain = 0.0; m.validate(); }(),
                  std::invalid_argument);
  CHECK_THROWS_AS([] { PaModel m; m.p = 0.0; m.validate(); }(),
                  std::invalid_argument);
}

TEST_CASE("am/pm: zero without twist, saturating arctangent-like shape with it") {
  PaModel pa;
  CHECK(pa.am_pm(0.7) == 0.0);  // default alpha = 0
  pa.ampm_alpha = 0.4;
  pa.ampm_beta = 0.8;
  pa.ampm_q = 4.0;
  CHECK(pa.am_pm(0.0) == 0.0);
  CHECK(pa.am_pm(0.8) == doctest::Approx(0.2));  // r = 1 at a = beta
  CHECK(pa.am_pm(100.0) == doctest::Approx(0.4).epsilon(1e-4));
  double prev = -1.0;
  for (double a = 0.0; a < 4.0; a += 0.1) {
    const double v = pa.am_pm(a);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("pa_apply: linear kind is a pure gain, rapp honors the backoff") {
  std::vector<cd> x;
  Rng rng(9);
  for (int i = 0; i < 4096; ++i) x.push_back(rng.cgaussian());

  PaModel lin;
  lin.kind = PaModel::Kind::Linear;
  lin.gain = 3.0;
  auto lr = pa_apply(x, lin, 6.0);
  CHECK(lr.drive_scale == doctest::Approx(1.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(lr.samples[i].real() == doctest::Approx(3.0 * x[i].real()));
    CHECK(lr.samples[i].imag() == doctest::Approx(3.0 * x[i].imag()));
  }

  PaModel rapp;  // defaults
  auto rr = pa_apply(x, rapp, 6.0);
  double mean_in = 0.0;
  for (const auto& v : x) mean_in += sqnorm(v);
  mean_in /= x.size();
  // drive scale puts the mean input power 6 dB under the saturation drive
  const double driven = mean_in * rr.drive_scale * rr.drive_scale;
  CHECK(driven == doctest::Approx(rapp.input_sat() * rapp.input_sat() *
                                  std::pow(10.0, -0.6)));
  double mean_out = 0.0;
  for (const auto& v : rr.samples) mean_out += sqnorm(v);
  mean_out /= rr.samples.size();
  CHECK(mean_out == doctest::Approx(rr.mean_out_power));
  CHECK(rr.obo_db ==
        doctest::Approx(10.0 * std::log10(rapp.vsat * rapp.vsat / mean_out)));
  // deeper backoff -> more output backoff
  auto rr2 = pa_apply(x, rapp, 9.0);
  CHECK(rr2.obo_db > rr.obo_db);
}

TEST_CASE("pa_apply keeps a constant envelope constant") {
  std::vector<cd> x;
  for (int i = 0; i < 256; ++i) x.push_back(std::polar(1.0, 0.3 * i));
  PaModel pa;
  pa.ampm_alpha = 0.3;
  auto res = pa_apply(x, pa, 0.0);
  const double mag = std::abs(res.samples[0]);
  const double twist = std::arg(res.samples[0] * std::conj(x[0]));
  CHECK(twist > 0.0);  // am/pm actually rotates
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(res.samples[i]) == doctest::Approx(mag).epsilon(1e-12));
    CHECK(std::arg(res.samples[i] * std::conj(x[i])) == doctest::Approx(twist));
  }
}
