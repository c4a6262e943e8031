// Elliptic prototype via Landen transformations of the Jacobi functions
// (cd and sn with normalized argument u, where u = 1 <-> K).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "emgdecon/error.hpp"
#include "emgdecon/filters.hpp"

namespace emgdecon {
namespace elliptic {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Descending Landen moduli k_n = (k_{n-1} / (1 + k'_{n-1}))^2.
std::vector<double> landen(double k) {
  std::vector<double> v;
  for (int i = 0; i < 64 && k > 1e-300; ++i) {
    const double kp = std::sqrt((1.0 - k) * (1.0 + k));
    k = std::pow(k / (1.0 + kp), 2);
    v.push_back(k);
    if (k < 1e-18) break;
  }
  return v;
}

double symmetric_rem(double x, double y) { return x - y * std::round(x / y); }

}  // namespace

double complete_integral(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw PreconditionError("elliptic: modulus must lie in [0, 1)");
  double prod = 1.0;
  for (double v : landen(k)) prod *= 1.0 + v;
  return prod * kPi / 2.0;
}

cplx cde(cplx u, double k) {
  const auto v = landen(k);
  cplx w = std::cos(u * kPi / 2.0);
  for (auto it = v.rbegin(); it != v.rend(); ++it) {
    w = (1.0 + *it) * w / (1.0 + *it * w * w);
  }
  return w;
}

cplx sne(cplx u, double k) {
  const auto v = landen(k);
  cplx w = std::sin(u * kPi / 2.0);
  for (auto it = v.rbegin(); it != v.rend(); ++it) {
    w = (1.0 + *it) * w / (1.0 + *it * w * w);
  }
  return w;
}

cplx acde(cplx w, double k) {
  const auto v = landen(k);
  double prev = k;
  for (double vn : v) {
    w = w / (1.0 + std::sqrt(1.0 - w * w * prev * prev)) * 2.0 / (1.0 + vn);
    prev = vn;
  }
  cplx u = 2.0 / kPi * std::acos(w);
  const double kk = complete_integral(k);
  const double kkp = complete_integral(std::sqrt((1.0 - k) * (1.0 + k)));
  const double r = kkp / kk;
  return {symmetric_rem(u.real(), 4.0), symmetric_rem(u.imag(), 2.0 * r)};
}

cplx asne(cplx w, double k) { return 1.0 - acde(w, k); }

double selectivity(int order, double ripple_db, double atten_db) {
  if (order < 1) throw PreconditionError("elliptic: order must be >= 1");
  if (!(ripple_db > 0.0) || !(atten_db > ripple_db)) {
    throw PreconditionError("elliptic: need 0 < ripple < attenuation");
  }
  const double ep = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
  const double es = std::sqrt(std::pow(10.0, atten_db / 10.0) - 1.0);
  const double k1 = ep / es;
  const double k1p = std::sqrt((1.0 - k1) * (1.0 + k1));
  // Degree equation.
  const int l = order / 2;
  double prod = 1.0;
  for (int i = 1; i <= l; ++i) {
    const double ui = (2.0 * i - 1.0) / order;
    prod *= sne(ui, k1p).real();
  }
  const double kp = std::pow(k1p, order) * std::pow(prod, 4);
  return std::sqrt((1.0 - kp) * (1.0 + kp));
}

Zpk prototype(int order, double ripple_db, double atten_db) {
  const double k = selectivity(order, ripple_db, atten_db);
  const double ep = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
  const double es = std::sqrt(std::pow(10.0, atten_db / 10.0) - 1.0);
  const double k1 = ep / es;

  const int l = order / 2;
  const bool odd = order % 2 == 1;
  const cplx j(0.0, 1.0);
  const double v0 = (-j * asne(j / ep, k1) / static_cast<double>(order)).real();

  Zpk out;
  for (int i = 1; i <= l; ++i) {
    const double ui = (2.0 * i - 1.0) / order;
    const cplx zeta = cde(ui, k);
    const cplx z = j / (k * zeta);
    const cplx p = j * cde(cplx(ui, -v0), k);
    out.zeros.push_back(z);
    out.zeros.push_back(std::conj(z));
    out.poles.push_back(p);
    out.poles.push_back(std::conj(p));
  }
  if (odd) {
    const cplx p0 = j * sne(j * v0, k);
    out.poles.emplace_back(p0.real(), 0.0);
  }

  // Unit DC gain for odd order; DC sits at a ripple trough for even order.
  const double h0 = odd ? 1.0 : 1.0 / std::sqrt(1.0 + ep * ep);
  cplx num = 1.0, den = 1.0;
  for (const auto& z : out.zeros) num *= -z;
  for (const auto& p : out.poles) den *= -p;
  out.gain = h0 * (den / num).real();
  return out;
}

}  // namespace elliptic

namespace {
using cplx = std::complex<double>;

cplx product_neg(const std::vector<cplx>& v) {
  cplx acc = 1.0;
  for (const auto& x : v) acc *= -x;
  return acc;
}
}  // namespace

Zpk lowpass_to_lowpass(const Zpk& p, double wc) {
  Zpk out;
  for (const auto& z : p.zeros) out.zeros.push_back(z * wc);
  for (const auto& q : p.poles) out.poles.push_back(q * wc);
  const int degree = static_cast<int>(p.poles.size()) - static_cast<int>(p.zeros.size());
  out.gain = p.gain * std::pow(wc, degree);
  return out;
}

Zpk lowpass_to_highpass(const Zpk& p, double wc) {
  Zpk out;
  for (const auto& z : p.zeros) out.zeros.push_back(wc / z);
  for (const auto& q : p.poles) out.poles.push_back(wc / q);
  const std::size_t degree = p.poles.size() - p.zeros.size();
  for (std::size_t i = 0; i < degree; ++i) out.zeros.emplace_back(0.0, 0.0);
  out.gain = p.gain * (product_neg(p.zeros) / product_neg(p.poles)).real();
  return out;
}

Zpk lowpass_to_bandstop(const Zpk& p, double w0, double bw) {
  Zpk out;
  auto map = [&](cplx x, std::vector<cplx>& dst) {
    const cplx half = bw / (2.0 * x);
    const cplx root = std::sqrt(half * half - w0 * w0);
    dst.push_back(half + root);
    dst.push_back(half - root);
  };
  for (const auto& z : p.zeros) map(z, out.zeros);
  for (const auto& q : p.poles) map(q, out.poles);
  const std::size_t degree = p.poles.size() - p.zeros.size();
  for (std::size_t i = 0; i < degree; ++i) {
    out.zeros.emplace_back(0.0, w0);
    out.zeros.emplace_back(0.0, -w0);
  }
  out.gain = p.gain * (product_neg(p.zeros) / product_neg(p.poles)).real();
  return out;
}

Zpk bilinear(const Zpk& analog, double rate) {
  const double fs2 = 2.0 * rate;
  Zpk out;
  for (const auto& z : analog.zeros) out.zeros.push_back((fs2 + z) / (fs2 - z));
  for (const auto& p : analog.poles) out.poles.push_back((fs2 + p) / (fs2 - p));
  while (out.zeros.size() < out.poles.size()) out.zeros.emplace_back(-1.0, 0.0);
  cplx num = 1.0, den = 1.0;
  for (const auto& z : analog.zeros) num *= fs2 - z;
  for (const auto& p : analog.poles) den *= fs2 - p;
  out.gain = analog.gain * (num / den).real();
  return out;
}

namespace {

constexpr double kRealTol = 1e-10;

bool is_real(cplx x) { return std::abs(x.imag()) <= kRealTol * std::max(1.0, std::abs(x)); }

// One representative per conjugate pair (upper half plane) plus the reals.
void split_roots(const std::vector<cplx>& roots, std::vector<cplx>& complex_upper,
                 std::vector<double>& reals) {
  for (const auto& r : roots) {
    if (is_real(r)) {
      reals.push_back(r.real());
    } else if (r.imag() > 0.0) {
      complex_upper.push_back(r);
    }
  }
}

}  // namespace

std::vector<Biquad> zpk_to_sos(const Zpk& digital) {
  if (digital.zeros.size() != digital.poles.size()) {
    throw PreconditionError("zpk_to_sos: zero and pole counts differ");
  }
  std::vector<cplx> pc, zc;
  std::vector<double> pr, zr;
  split_roots(digital.poles, pc, pr);
  split_roots(digital.zeros, zc, zr);
  if (2 * pc.size() + pr.size() != digital.poles.size() ||
      2 * zc.size() + zr.size() != digital.zeros.size()) {
    throw NumericError("zpk_to_sos: roots are not in conjugate pairs");
  }

  // Poles nearest the unit circle choose their zeros first.
  std::sort(pc.begin(), pc.end(), [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  std::sort(pr.begin(), pr.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });

  struct Section {
    std::array<double, 3> b;
    std::array<double, 3> a;
    double radius;
  };
  std::vector<Section> secs;

  auto take_zero_pair = [&](cplx target) -> std::array<double, 3> {
    if (!zc.empty()) {
      auto best = std::min_element(zc.begin(), zc.end(), [&](cplx x, cplx y) {
        return std::abs(x - target) < std::abs(y - target);
      });
      const cplx z = *best;
      zc.erase(best);
      return {1.0, -2.0 * z.real(), std::norm(z)};
    }
    if (zr.size() >= 2) {
      std::sort(zr.begin(), zr.end(), [&](double x, double y) {
        return std::abs(x - target) < std::abs(y - target);
      });
      const double z1 = zr[0], z2 = zr[1];
      zr.erase(zr.begin(), zr.begin() + 2);
      return {1.0, -(z1 + z2), z1 * z2};
    }
    if (zr.size() == 1) {
      const double z1 = zr[0];
      zr.clear();
      return {1.0, -z1, 0.0};
    }
    return {1.0, 0.0, 0.0};
  };

  for (const auto& p : pc) {
    auto b = take_zero_pair(p);
    secs.push_back({b, {1.0, -2.0 * p.real(), std::norm(p)}, std::abs(p)});
  }
  for (std::size_t i = 0; i < pr.size(); i += 2) {
    if (i + 1 < pr.size()) {
      const double p1 = pr[i], p2 = pr[i + 1];
      auto b = take_zero_pair(cplx(p1, 0.0));
      secs.push_back({b, {1.0, -(p1 + p2), p1 * p2}, std::max(std::abs(p1), std::abs(p2))});
    } else {
      const double p1 = pr[i];
      std::array<double, 3> b{1.0, 0.0, 0.0};
      if (!zr.empty()) {
        b = {1.0, -zr.back(), 0.0};
        zr.pop_back();
      } else if (!zc.empty()) {
        throw NumericError("zpk_to_sos: cannot pair a complex zero with a real pole");
      }
      secs.push_back({b, {1.0, -p1, 0.0}, std::abs(p1)});
    }
  }

  std::stable_sort(secs.begin(), secs.end(),
                   [](const Section& x, const Section& y) { return x.radius < y.radius; });
  std::vector<Biquad> out;
  out.reserve(secs.size());
  for (const auto& s : secs) out.push_back(Biquad{s.b, s.a});
  if (out.empty()) out.push_back(Biquad{});
  for (double& c : out.front().b) c *= digital.gain;
  return out;
}

}  // namespace emgdecon
