#pragma once

// ECG beat extraction: Butterworth band-pass (zero phase), a Pan-Tompkins
// style R-peak detector and fixed windows around each detected peak.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "gkpca/csv.hpp"
#include "gkpca/dataset.hpp"
#include "gkpca/error.hpp"

namespace gkpca {

struct EcgConfig {
  double sample_rate_hz = 360.0;
  double band_low_hz = 1.0;
  double band_high_hz = 60.0;
  int filter_order = 5;
  double window_seconds = 0.5;
  int epoch_samples = 180;
  double refractory_seconds = 0.2;
  double integration_seconds = 0.15;
  double threshold_std_factor = 0.6;

  int refractory_samples() const { return static_cast<int>(std::lround(refractory_seconds * sample_rate_hz)); }
  int integration_samples() const {
    return std::max(1, static_cast<int>(std::lround(integration_seconds * sample_rate_hz)));
  }

  void validate() const {
    if (!(sample_rate_hz > 0.0)) fail(ErrorKind::Input, "sample rate must be positive");
    if (!(band_low_hz > 0.0 && band_low_hz < band_high_hz && band_high_hz < sample_rate_hz / 2.0))
      fail(ErrorKind::Input, "band edges must satisfy 0 < low < high < fs/2");
    if (filter_order < 1) fail(ErrorKind::Input, "filter order must be at least 1");
    if (epoch_samples != std::lround(sample_rate_hz * window_seconds))
      fail(ErrorKind::Input, "epoch_samples must equal round(sample_rate_hz * window_seconds)");
  }
};

/// Second-order section, b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z) const {
    const std::complex<double> zi = 1.0 / z;
    return (b0 + b1 * zi + b2 * zi * zi) / (1.0 + a1 * zi + a2 * zi * zi);
  }
};

/// Complex frequency response of a cascade at `freq_hz`.
inline std::complex<double> sos_response(const std::vector<Biquad>& sos, double freq_hz, double sample_rate_hz) {
  const std::complex<double> z = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
  std::complex<double> h = 1.0;
  for (const Biquad& s : sos) h *= s.response(z);
  return h;
}

/// Butterworth band-pass of the given prototype order as `order` biquads,
/// via the low-pass to band-pass transform and a bilinear transform with
/// both band edges prewarped. Unit gain at the geometric centre frequency.
inline std::vector<Biquad> design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
  using cd = std::complex<double>;
  if (order < 1) fail(ErrorKind::Input, "filter order must be at least 1");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0))
    fail(ErrorKind::Input, "band edges must satisfy 0 < low < high < fs/2");

  const double two_fs = 2.0 * fs;
  const double w_low = two_fs * std::tan(std::numbers::pi * low_hz / fs);
  const double w_high = two_fs * std::tan(std::numbers::pi * high_hz / fs);
  const double bw = w_high - w_low;
  const double w0_sq = w_low * w_high;

  const auto to_z = [&](cd s) { return (two_fs + s) / (two_fs - s); };
  const auto bandpass_roots = [&](cd p) {
    const cd pb = p * bw;
    const cd disc = std::sqrt(pb * pb - 4.0 * w0_sq);
    return std::pair<cd, cd>{(pb + disc) / 2.0, (pb - disc) / 2.0};
  };

  std::vector<Biquad> sos;
  const auto push_pair = [&](cd z1, cd z2) {
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;  // zeros at z = 1 and z = -1
    q.a1 = -(z1 + z2).real();
    q.a2 = (z1 * z2).real();
    if (std::abs(z1) >= 1.0 || std::abs(z2) >= 1.0) fail(ErrorKind::Numeric, "designed section is unstable");
    sos.push_back(q);
  };

  for (int k = 0; k < order; ++k) {
    const cd p = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
    if (p.imag() < -1e-12) continue;  // handled with its conjugate
    const auto [s1, s2] = bandpass_roots(p);
    if (std::abs(p.imag()) <= 1e-12) {
      push_pair(to_z(s1), to_z(s2));
    } else {
      push_pair(to_z(s1), std::conj(to_z(s1)));
      push_pair(to_z(s2), std::conj(to_z(s2)));
    }
  }

  const double center_hz = fs / std::numbers::pi * std::atan(std::sqrt(w0_sq) / two_fs);
  const double gain = 1.0 / std::abs(sos_response(sos, center_hz, fs));
  const double per_section = std::pow(gain, 1.0 / static_cast<double>(sos.size()));
  for (Biquad& q : sos) {
    q.b0 *= per_section;
    q.b1 *= per_section;
    q.b2 *= per_section;
  }
  return sos;
}

inline std::vector<Biquad> design_butterworth_bandpass(const EcgConfig& cfg) {
  return design_butterworth_bandpass(cfg.filter_order, cfg.band_low_hz, cfg.band_high_hz, cfg.sample_rate_hz);
}

namespace detail {

struct BiquadState {
  double s1 = 0.0, s2 = 0.0;
};

// Steady-state section states for a constant unit input.
inline std::vector<BiquadState> sos_steady_state(const std::vector<Biquad>& sos) {
  std::vector<BiquadState> zi(sos.size());
  double level = 1.0;
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const Biquad& q = sos[k];
    const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    zi[k].s2 = level * (q.b2 - q.a2 * gain);
    zi[k].s1 = level * (q.b1 - q.a1 * gain) + zi[k].s2;
    level *= gain;
  }
  return zi;
}

// Cascade in transposed direct form II, starting from zi scaled by x[0].
inline void sos_filter_inplace(const std::vector<Biquad>& sos, std::vector<double>& x) {
  if (x.empty()) return;
  std::vector<BiquadState> st = sos_steady_state(sos);
  for (BiquadState& s : st) {
    s.s1 *= x.front();
    s.s2 *= x.front();
  }
  for (double& v : x) {
    double in = v;
    for (std::size_t k = 0; k < sos.size(); ++k) {
      const Biquad& q = sos[k];
      const double out = q.b0 * in + st[k].s1;
      st[k].s1 = q.b1 * in - q.a1 * out + st[k].s2;
      st[k].s2 = q.b2 * in - q.a2 * out;
      in = out;
    }
    v = in;
  }
}

}  // namespace detail

/// Forward-backward application of a biquad cascade with odd-extension
/// padding. Output has the input's length and zero phase.
inline std::vector<double> sos_filtfilt(const std::vector<Biquad>& sos, const std::vector<double>& signal) {
  const std::size_t n = signal.size();
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sos.size() + 1), n > 0 ? n - 1 : 0);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal.front() - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal.back() - signal[n - 1 - i]);

  detail::sos_filter_inplace(sos, ext);
  std::reverse(ext.begin(), ext.end());
  detail::sos_filter_inplace(sos, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline std::vector<double> butterworth_bandpass(const std::vector<double>& signal, const EcgConfig& cfg) {
  cfg.validate();
  if (signal.size() <= static_cast<std::size_t>(6 * cfg.filter_order))
    fail(ErrorKind::Input, "signal too short for filtering (" + std::to_string(signal.size()) + " samples, need more than " +
                               std::to_string(6 * cfg.filter_order) + ")");
  return sos_filtfilt(design_butterworth_bandpass(cfg), signal);
}

/// Pan-Tompkins style detector on an already band-passed signal:
/// derivative, squaring, moving-window integration, a threshold at
/// mean + k*std of the integrated signal, then the signal maximum inside
/// each supra-threshold region. Peaks closer than the refractory period keep
/// only the larger one.
inline std::vector<std::size_t> detect_r_peaks(const std::vector<double>& filtered, const EcgConfig& cfg) {
  const std::size_t n = filtered.size();
  if (n < 5) return {};

  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = (-filtered[i - 2] - 2.0 * filtered[i - 1] + 2.0 * filtered[i + 1] + filtered[i + 2]) / 8.0;
    energy[i] = d * d;
  }

  // Centred moving average via prefix sums.
  const std::size_t w = static_cast<std::size_t>(cfg.integration_samples());
  const std::size_t half = w / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + energy[i];
  std::vector<double> integrated(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, lo + w);
    integrated[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(w);
  }

  double mean = 0.0;
  for (double v : integrated) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : integrated) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (!(sd > 0.0)) return {};
  const double threshold = mean + cfg.threshold_std_factor * sd;

  std::vector<std::size_t> candidates;
  std::size_t i = 0;
  while (i < n) {
    if (integrated[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < n && integrated[end] > threshold) ++end;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, end + half);
    std::size_t best = lo;
    for (std::size_t k = lo; k < hi; ++k)
      if (filtered[k] > filtered[best]) best = k;
    candidates.push_back(best);
    i = end;
  }

  const auto refractory = static_cast<std::size_t>(cfg.refractory_samples());
  std::vector<std::size_t> peaks;
  for (std::size_t c : candidates) {
    if (!peaks.empty() && c <= peaks.back()) continue;
    if (!peaks.empty() && c - peaks.back() < refractory) {
      if (filtered[c] > filtered[peaks.back()]) peaks.back() = c;
      continue;
    }
    peaks.push_back(c);
  }
  return peaks;
}

/// Windows of cfg.epoch_samples centred on each peak (half before, the rest
/// from the peak on). Peaks without full margins are dropped.
inline Dataset extract_epochs(const std::vector<double>& filtered, const std::vector<std::size_t>& peaks,
                              const EcgConfig& cfg) {
  const auto len = static_cast<std::size_t>(cfg.epoch_samples);
  const std::size_t before = len / 2;
  std::vector<std::size_t> kept;
  for (std::size_t p : peaks)
    if (p >= before && p - before + len <= filtered.size()) kept.push_back(p);

  Dataset ds;
  ds.kind = Signal{cfg.sample_rate_hz};
  ds.X.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(len));
  for (std::size_t r = 0; r < kept.size(); ++r)
    for (std::size_t j = 0; j < len; ++j)
      ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = filtered[kept[r] - before + j];
  return ds;
}

/// One sample per line; blank lines and lines starting with '#' are skipped.
inline std::vector<double> parse_signal_text(std::istream& in, const std::string& name = "signal") {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto v = detail::parse_double(t);
    if (!v) fail(ErrorKind::Format, name + ":" + std::to_string(line_no) + ": not a number");
    out.push_back(*v);
  }
  return out;
}

inline std::vector<double> load_signal_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return parse_signal_text(in, path.string());
}

struct EcgRecord {
  std::vector<double> samples;
  int label = 0;  // record-level class, e.g. 0 normal / 1 paced
};

/// Filter, detect and cut every record; each epoch inherits its record's label.
inline Dataset ecg_dataset(const std::vector<EcgRecord>& records, const EcgConfig& cfg) {
  cfg.validate();
  std::vector<Dataset> parts;
  std::vector<int> labels;
  Eigen::Index rows = 0;
  for (const EcgRecord& rec : records) {
    const std::vector<double> filtered = butterworth_bandpass(rec.samples, cfg);
    Dataset part = extract_epochs(filtered, detect_r_peaks(filtered, cfg), cfg);
    labels.insert(labels.end(), static_cast<std::size_t>(part.size()), rec.label);
    rows += part.size();
    parts.push_back(std::move(part));
  }
  Dataset ds;
  ds.kind = Signal{cfg.sample_rate_hz};
  ds.X.resize(rows, cfg.epoch_samples);
  Eigen::Index at = 0;
  for (const Dataset& p : parts) {
    ds.X.middleRows(at, p.size()) = p.X;
    at += p.size();
  }
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace gkpca
