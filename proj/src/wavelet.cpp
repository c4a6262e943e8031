#include "emgdecon/wavelet.hpp"

#include <algorithm>
#include <cmath>

#include "emgdecon/error.hpp"

namespace emgdecon {

std::string to_string(WaveletFamily w) { return w == WaveletFamily::Db4 ? "db4" : "sym4"; }

namespace {

WaveletFilters from_dec_lo(std::vector<double> dec_lo) {
  WaveletFilters f;
  const std::size_t n = dec_lo.size();
  f.rec_lo.assign(dec_lo.rbegin(), dec_lo.rend());
  f.dec_hi.resize(n);
  for (std::size_t j = 0; j < n; ++j) f.dec_hi[j] = (j % 2 == 0 ? -1.0 : 1.0) * f.rec_lo[j];
  f.rec_hi.assign(f.dec_hi.rbegin(), f.dec_hi.rend());
  f.dec_lo = std::move(dec_lo);
  return f;
}

// Half-sample symmetric extension: x[-1] = x[0], x[N] = x[N-1].
double sym_at(std::span<const double> x, std::ptrdiff_t m) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  while (m < 0 || m >= n) {
    if (m < 0) m = -m - 1;
    if (m >= n) m = 2 * n - 1 - m;
  }
  return x[static_cast<std::size_t>(m)];
}

double median_abs(std::vector<double> v) {
  for (auto& x : v) x = std::abs(x);
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

const WaveletFilters& wavelet_filters(WaveletFamily w) {
  static const WaveletFilters db4 = from_dec_lo(
      {-0.010597401785069032, 0.0328830116668852, 0.030841381835560764, -0.18703481171909309,
       -0.027983769416859854, 0.6308807679298589, 0.7148465705529157, 0.2303778133088965});
  static const WaveletFilters sym4 = from_dec_lo(
      {-0.07576571478927333, -0.02963552764599851, 0.49761866763201545, 0.8037387518059161,
       0.29785779560527736, -0.09921954357684722, -0.012603967262037833, 0.0322231006040427});
  return w == WaveletFamily::Db4 ? db4 : sym4;
}

DwtBands dwt(std::span<const double> x, const WaveletFilters& w) {
  if (x.empty()) throw PreconditionError("dwt: empty input");
  const std::size_t f = w.dec_lo.size();
  const std::size_t out = (x.size() + f - 1) / 2;
  DwtBands b{std::vector<double>(out), std::vector<double>(out)};
  for (std::size_t i = 0; i < out; ++i) {
    double a = 0.0, d = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      const double v = sym_at(x, static_cast<std::ptrdiff_t>(2 * i + 1) - static_cast<std::ptrdiff_t>(j));
      a += w.dec_lo[j] * v;
      d += w.dec_hi[j] * v;
    }
    b.approx[i] = a;
    b.detail[i] = d;
  }
  return b;
}

std::vector<double> idwt(std::span<const double> approx, std::span<const double> detail,
                         const WaveletFilters& w) {
  if (approx.size() != detail.size()) throw PreconditionError("idwt: band length mismatch");
  const std::size_t f = w.rec_lo.size();
  const std::size_t n = approx.size();
  if (2 * n + 2 <= f) throw PreconditionError("idwt: bands too short");
  const std::size_t len = 2 * n + 2 - f;
  std::vector<double> full(2 * n + f - 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      full[2 * i + j] += approx[i] * w.rec_lo[j] + detail[i] * w.rec_hi[j];
    }
  }
  return {full.begin() + static_cast<std::ptrdiff_t>(f - 2),
          full.begin() + static_cast<std::ptrdiff_t>(f - 2 + len)};
}

int dwt_max_level(std::size_t n, std::size_t filter_len) {
  if (filter_len < 2 || n < filter_len - 1) return 0;
  return static_cast<int>(std::floor(std::log2(static_cast<double>(n) / static_cast<double>(filter_len - 1))));
}

std::vector<std::vector<double>> wavedec(std::span<const double> x, WaveletFamily w, int levels) {
  const auto& f = wavelet_filters(w);
  if (levels < 1 || levels > dwt_max_level(x.size(), f.dec_lo.size())) {
    throw PreconditionError("wavedec: invalid level count " + std::to_string(levels));
  }
  std::vector<std::vector<double>> details;
  std::vector<double> a(x.begin(), x.end());
  for (int l = 0; l < levels; ++l) {
    auto b = dwt(a, f);
    details.push_back(std::move(b.detail));
    a = std::move(b.approx);
  }
  std::vector<std::vector<double>> out{std::move(a)};
  for (auto it = details.rbegin(); it != details.rend(); ++it) out.push_back(std::move(*it));
  return out;
}

std::vector<double> waverec(const std::vector<std::vector<double>>& coeffs, WaveletFamily w,
                            std::size_t length) {
  if (coeffs.size() < 2) throw PreconditionError("waverec: need approximation and details");
  const auto& f = wavelet_filters(w);
  std::vector<double> a = coeffs[0];
  for (std::size_t l = 1; l < coeffs.size(); ++l) {
    const auto& d = coeffs[l];
    if (a.size() == d.size() + 1) a.pop_back();
    if (a.size() != d.size()) throw PreconditionError("waverec: inconsistent band lengths");
    a = idwt(a, d, f);
  }
  if (a.size() < length) throw PreconditionError("waverec: requested length too long");
  a.resize(length);
  return a;
}

double soft_threshold(double v, double t) {
  const double m = std::abs(v) - t;
  return m > 0.0 ? std::copysign(m, v) : 0.0;
}

std::vector<double> wavelet_denoise(std::span<const double> x, const WaveletDenoiser& spec) {
  if (spec.threshold_scale < 0.0) throw PreconditionError("wavelet_denoise: negative threshold");
  auto c = wavedec(x, spec.family, spec.levels);
  const double sigma = median_abs(c.back()) / 0.6745;
  const double t =
      spec.threshold_scale * sigma * std::sqrt(2.0 * std::log(static_cast<double>(x.size())));
  if (t > 0.0) {
    for (std::size_t l = 1; l < c.size(); ++l) {
      for (auto& v : c[l]) v = soft_threshold(v, t);
    }
  }
  return waverec(c, spec.family, x.size());
}

Segment wavelet_denoise(const Segment& seg, const WaveletDenoiser& spec) {
  return Segment(wavelet_denoise(seg.samples(), spec), seg.index());
}

}  // namespace emgdecon
