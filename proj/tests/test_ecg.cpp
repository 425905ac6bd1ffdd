#include <gkpca/ecg.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "support/synthetic_ecg.hpp"

using namespace gkpca;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

// Magnitude of the analog Butterworth band-pass evaluated at the prewarped
// frequency; the bilinear transform maps it exactly onto the digital response.
double analog_bandpass_magnitude(double f, const EcgConfig& cfg) {
  const double fs = cfg.sample_rate_hz;
  const auto warp = [&](double hz) { return 2.0 * fs * std::tan(kPi * hz / fs); };
  const double w = warp(f), wl = warp(cfg.band_low_hz), wh = warp(cfg.band_high_hz);
  const double x = (w * w - wl * wh) / (w * (wh - wl));
  return 1.0 / std::sqrt(1.0 + std::pow(x * x, cfg.filter_order));
}

std::vector<double> sine(double hz, double seconds, double fs) {
  std::vector<double> s(static_cast<std::size_t>(seconds * fs));
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::sin(2.0 * kPi * hz * static_cast<double>(k) / fs);
  return s;
}

double rms(const std::vector<double>& s, std::size_t trim) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t k = trim; k + trim < s.size(); ++k, ++count) acc += s[k] * s[k];
  return std::sqrt(acc / static_cast<double>(count));
}

}  // namespace

TEST_CASE("EcgConfig defaults and validation", "[ecg]") {
  EcgConfig cfg;
  CHECK(cfg.sample_rate_hz == 360.0);
  CHECK(cfg.filter_order == 5);
  CHECK(cfg.epoch_samples == 180);
  CHECK(cfg.refractory_samples() == 72);
  CHECK_NOTHROW(cfg.validate());

  EcgConfig bad = cfg;
  bad.epoch_samples = 179;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.band_high_hz = 200.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.band_low_hz = 70.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("Butterworth design matches the analog prototype", "[ecg][oracle]") {
  const EcgConfig cfg;
  const auto sos = design_butterworth_bandpass(cfg);
  REQUIRE(sos.size() == 5);
  for (double f : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 59.0, 60.0, 80.0, 120.0, 170.0}) {
    const double got = std::abs(sos_response(sos, f, cfg.sample_rate_hz));
    CHECK(got == Approx(analog_bandpass_magnitude(f, cfg)).epsilon(1e-9).margin(1e-12));
  }
  // Frozen from a reference design (scipy.signal.butter(5, [1, 60], 'bandpass', fs=360, output='sos')).
  CHECK(std::abs(sos_response(sos, 0.1, 360.0)) == Approx(9.27257690e-06).epsilon(1e-6));
  CHECK(std::abs(sos_response(sos, 1.0, 360.0)) == Approx(7.07106781e-01).epsilon(1e-8));
  CHECK(std::abs(sos_response(sos, 30.0, 360.0)) == Approx(9.99869633e-01).epsilon(1e-8));
  CHECK(std::abs(sos_response(sos, 100.0, 360.0)) == Approx(2.51634852e-02).epsilon(1e-6));
  for (const auto& q : sos) {
    // Poles inside the unit circle: |a2| < 1 and |a1| < 1 + a2.
    CHECK(std::abs(q.a2) < 1.0);
    CHECK(std::abs(q.a1) < 1.0 + q.a2);
  }
}

TEST_CASE("band-pass attenuates below the band and passes inside it", "[ecg][oracle]") {
  const EcgConfig cfg;
  const auto sos = design_butterworth_bandpass(cfg);

  const auto low = sine(0.1, 60.0, 360.0);
  const auto low_out = butterworth_bandpass(low, cfg);
  REQUIRE(low_out.size() == low.size());
  // Forward-backward filtering squares the magnitude response.
  const double expected_low = std::pow(std::abs(sos_response(sos, 0.1, 360.0)), 2);
  CHECK(rms(low_out, 0) / rms(low, 0) < 0.05);
  CHECK(expected_low < 0.05);

  const auto mid = sine(10.0, 20.0, 360.0);
  const auto mid_out = butterworth_bandpass(mid, cfg);
  const double ratio = rms(mid_out, 360) / rms(mid, 360);
  CHECK(ratio == Approx(std::pow(std::abs(sos_response(sos, 10.0, 360.0)), 2)).epsilon(1e-3));
  CHECK(std::abs(ratio - 1.0) <= 0.10);
}

TEST_CASE("band-pass edge cases", "[ecg]") {
  const EcgConfig cfg;
  const std::vector<double> zeros(500, 0.0);
  CHECK(butterworth_bandpass(zeros, cfg) == zeros);
  CHECK_THROWS_AS(butterworth_bandpass(std::vector<double>(30, 1.0), cfg), Error);
  CHECK_NOTHROW(butterworth_bandpass(std::vector<double>(31, 1.0), cfg));
}

TEST_CASE("band-pass is zero phase", "[ecg][property]") {
  const EcgConfig cfg;
  for (std::size_t center : {300u, 611u, 1000u}) {
    std::vector<double> pulse(1500, 0.0);
    for (std::size_t k = 0; k < pulse.size(); ++k) {
      const double t = (static_cast<double>(k) - static_cast<double>(center)) / 360.0;
      pulse[k] = std::exp(-0.5 * t * t / (0.01 * 0.01));
    }
    const auto out = butterworth_bandpass(pulse, cfg);
    const auto peak = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
    CHECK(peak == center);
  }
}

TEST_CASE("detect_r_peaks on a synthetic spike train", "[ecg]") {
  const EcgConfig cfg;
  const auto train = synth::spike_train(10.0, 360.0, 0.5, 1.0);
  REQUIRE(train.r_peaks.size() == 10);

  SECTION("raw spikes") {
    const auto peaks = detect_r_peaks(train.samples, cfg);
    REQUIRE(peaks.size() == 10);
    for (std::size_t k = 0; k < 10; ++k)
      CHECK(std::abs(static_cast<long>(peaks[k]) - static_cast<long>(train.r_peaks[k])) <= 2);
  }
  SECTION("after band-pass filtering") {
    const auto peaks = detect_r_peaks(butterworth_bandpass(train.samples, cfg), cfg);
    REQUIRE(peaks.size() == 10);
    for (std::size_t k = 0; k < 10; ++k)
      CHECK(std::abs(static_cast<long>(peaks[k]) - static_cast<long>(train.r_peaks[k])) <= 2);
  }
}

TEST_CASE("detect_r_peaks edge cases", "[ecg]") {
  const EcgConfig cfg;
  CHECK(detect_r_peaks(std::vector<double>(2000, 0.3), cfg).empty());
  CHECK(detect_r_peaks({}, cfg).empty());

  // Two spikes 0.1 s apart: the refractory rule keeps only the larger.
  std::vector<double> s(1000, 0.0);
  s[400] = 0.6;
  s[436] = 1.0;
  const auto peaks = detect_r_peaks(s, cfg);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0] == 436);
}

TEST_CASE("detected peaks respect the refractory period on realistic beats", "[ecg][property]") {
  const EcgConfig cfg;
  for (unsigned seed = 1; seed <= 6; ++seed) {
    const double rr = 0.6 + 0.1 * seed;
    const auto ecg = synth::make_ecg(30.0, 360.0, rr, {}, seed, 0.02, 0.3);
    const auto filtered = butterworth_bandpass(ecg.samples, cfg);
    const auto peaks = detect_r_peaks(filtered, cfg);
    for (std::size_t k = 1; k < peaks.size(); ++k) CHECK(peaks[k] - peaks[k - 1] >= 72);
    // Every true beat is found within 2 samples.
    std::size_t hits = 0;
    for (std::size_t truth : ecg.r_peaks)
      for (std::size_t p : peaks)
        if (std::abs(static_cast<long>(p) - static_cast<long>(truth)) <= 2) {
          ++hits;
          break;
        }
    CHECK(hits == ecg.r_peaks.size());
    CHECK(peaks.size() == ecg.r_peaks.size());
  }
}

TEST_CASE("extract_epochs cuts centred windows", "[ecg]") {
  const EcgConfig cfg;
  std::vector<double> s(180);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<double>(k);

  const auto one = extract_epochs(s, {90}, cfg);
  REQUIRE(one.size() == 1);
  CHECK(one.X.cols() == 180);
  CHECK(one.X(0, 0) == 0.0);
  CHECK(one.X(0, 90) == 90.0);
  CHECK(std::get<Signal>(one.kind).sample_rate_hz == 360.0);

  CHECK(extract_epochs(s, {10}, cfg).size() == 0);
  CHECK(extract_epochs(s, {91}, cfg).size() == 0);

  std::vector<double> longer(1000, 0.0);
  const auto many = extract_epochs(longer, {5, 100, 400, 909, 910, 999}, cfg);
  CHECK(many.size() == 4);  // 100, 400, 909, 910
  CHECK(many.X.cols() == 180);
}

TEST_CASE("ecg_dataset runs the full pipeline with record labels", "[ecg]") {
  const EcgConfig cfg;
  synth::EcgShape paced;
  paced.qrs_width_s = 0.03;
  paced.s_depth = 0.5;
  const auto normal = synth::make_ecg(20.0, 360.0, 0.8, {}, 1);
  const auto pacer = synth::make_ecg(20.0, 360.0, 0.85, paced, 2);
  const auto ds = ecg_dataset({{normal.samples, 0}, {pacer.samples, 1}}, cfg);
  REQUIRE(ds.labels);
  CHECK(ds.X.cols() == 180);
  CHECK(ds.size() == static_cast<Eigen::Index>(ds.labels->size()));
  CHECK(ds.size() >= static_cast<Eigen::Index>(normal.r_peaks.size() + pacer.r_peaks.size()) - 2);
  CHECK(std::count(ds.labels->begin(), ds.labels->end(), 1) > 0);
  CHECK(std::holds_alternative<Signal>(ds.kind));
}

TEST_CASE("parse_signal_text", "[ecg]") {
  std::istringstream ok("# record 101\n0.5\n\n-1.25\n3\n");
  CHECK(parse_signal_text(ok) == std::vector<double>{0.5, -1.25, 3.0});
  std::istringstream bad("0.5\nabc\n");
  try {
    (void)parse_signal_text(bad, "rec");
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(std::string(e.what()).find("rec:2") != std::string::npos);
  }
}
