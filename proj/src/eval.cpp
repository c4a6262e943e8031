#include "emgdecon/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "emgdecon/error.hpp"
#include "emgdecon/reward/registry.hpp"

namespace emgdecon {

std::optional<double> omega(std::span<const double> filtered, std::span<const double> clean,
                            std::span<const double> noisy) {
  if (filtered.size() != clean.size() || noisy.size() != clean.size() || clean.empty()) {
    throw PreconditionError("omega: signals must have equal, non-zero length");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    num += (filtered[i] - clean[i]) * (filtered[i] - clean[i]);
    den += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  }
  if (den == 0.0) return std::nullopt;
  return std::sqrt(num / den);
}

std::optional<double> omega(const SampledSignal& filtered, const SampledSignal& clean,
                            const SampledSignal& noisy) {
  return omega(filtered.samples(), clean.samples(), noisy.samples());
}

std::vector<std::optional<double>> omega_per_segment(const SampledSignal& filtered,
                                                     const SampledSignal& clean,
                                                     const SampledSignal& noisy) {
  if (filtered.size() != clean.size() || noisy.size() != clean.size()) {
    throw PreconditionError("omega_per_segment: length mismatch");
  }
  std::vector<std::optional<double>> out;
  for (std::size_t off = 0; off + kSegmentLength <= clean.size(); off += kSegmentLength) {
    out.push_back(omega(filtered.samples().subspan(off, kSegmentLength),
                        clean.samples().subspan(off, kSegmentLength),
                        noisy.samples().subspan(off, kSegmentLength)));
  }
  return out;
}

double action_accuracy(std::span<const FilterAction> taken, std::span<const FilterAction> desired) {
  if (taken.empty() || taken.size() != desired.size()) {
    throw PreconditionError("action_accuracy: lists must be non-empty and equal length");
  }
  std::size_t missed = 0;
  for (std::size_t i = 0; i < taken.size(); ++i) missed += taken[i] != desired[i] ? 1 : 0;
  const double t = static_cast<double>(taken.size());
  return (t - static_cast<double>(missed)) / t * 100.0;
}

std::vector<FilterAction> desired_actions(const NoiseSequence& seq) {
  std::vector<FilterAction> out;
  for (NoiseKind k : seq.kinds) out.push_back(desired_action(k));
  return out;
}

ConfusionMatrix confusion(std::span<const FilterAction> taken, std::span<const NoiseKind> kinds) {
  if (taken.size() != kinds.size()) throw PreconditionError("confusion: length mismatch");
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < taken.size(); ++i) {
    ++m[static_cast<std::size_t>(kinds[i]) - 1][static_cast<std::size_t>(action_index(taken[i]))];
  }
  return m;
}

std::optional<double> EvalReport::mean_omega(const std::string& method,
                                             std::span<const double> levels) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : omega) {
    if (r.method != method || !r.omega) continue;
    if (!levels.empty() && std::find(levels.begin(), levels.end(), r.level_db) == levels.end()) continue;
    sum += *r.omega;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<std::string> EvalReport::methods() const {
  std::vector<std::string> out;
  for (const auto& r : omega) {
    if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
  }
  return out;
}

std::string format_level(double level_db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", level_db);
  return buf;
}

std::string format_number(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

}  // namespace

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  {
    auto os = open_out(dir / "omega.csv");
    os << "level,dataset,method,omega\n";
    for (const auto& r : report.omega) {
      os << format_level(r.level_db) << ',' << r.dataset << ',' << r.method << ','
         << opt_number(r.omega) << '\n';
    }
  }
  {
    auto os = open_out(dir / "omega_segments.csv");
    os << "level,dataset,method,segment,omega\n";
    for (const auto& r : report.segment_omega) {
      os << format_level(r.level_db) << ',' << r.dataset << ',' << r.method << ',' << r.segment
         << ',' << opt_number(r.omega) << '\n';
    }
  }
  {
    std::set<double> levels;
    for (const auto& r : report.omega) levels.insert(r.level_db);
    auto os = open_out(dir / "mean_omega.csv");
    os << "level,method,mean_omega\n";
    for (double l : levels) {
      const double one[] = {l};
      for (const auto& m : report.methods()) {
        os << format_level(l) << ',' << m << ',' << opt_number(report.mean_omega(m, one)) << '\n';
      }
    }
    for (const auto& m : report.methods()) {
      os << "all," << m << ',' << opt_number(report.mean_omega(m)) << '\n';
    }
  }
  {
    auto os = open_out(dir / "accuracy.csv");
    os << "level,dataset,accuracy_pct\n";
    for (const auto& r : report.accuracy) {
      os << format_level(r.level_db) << ',' << r.dataset << ',' << format_number(r.accuracy_pct, 2)
         << '\n';
    }
  }
  static constexpr const char* kKinds[] = {"MOA", "PLI", "WGN"};
  for (const auto& t : report.traces) {
    const std::string tag = format_level(t.level_db) + "dB_" + t.dataset;
    auto os = open_out(dir / ("confusion_" + tag + ".csv"));
    os << "noise,HPF,NF,LPF\n";
    for (std::size_t i = 0; i < 3; ++i) {
      os << kKinds[i] << ',' << t.confusion[i][0] << ',' << t.confusion[i][1] << ','
         << t.confusion[i][2] << '\n';
    }
    write_action_svg(dir / ("actions_" + tag + ".svg"), t.desired, t.taken,
                     "Actions " + t.dataset + " at " + format_level(t.level_db) + " dB");
  }
}

namespace {

constexpr double kW = 800, kH = 300, kPad = 40;

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* color,
                     double width) {
  std::ostringstream s;
  s << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\" d=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s << (i == 0 ? 'M' : 'L') << format_number(pts[i].first, 2) << ' '
      << format_number(pts[i].second, 2) << ' ';
  }
  s << "\"/>\n";
  return s.str();
}

std::string svg_open(const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kPad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
    << "</text>\n"
    << "<path stroke=\"black\" d=\"M" << kPad << ' ' << kH - kPad << " L" << kW - kPad << ' '
    << kH - kPad << " M" << kPad << ' ' << kPad << " L" << kPad << ' ' << kH - kPad << "\"/>\n";
  return s.str();
}

}  // namespace

void write_action_svg(const std::filesystem::path& path, std::span<const FilterAction> desired,
                      std::span<const FilterAction> taken, const std::string& title) {
  if (desired.size() != taken.size() || desired.empty()) {
    throw PreconditionError("write_action_svg: action lists must match");
  }
  const double n = static_cast<double>(desired.size());
  auto pts = [&](std::span<const FilterAction> a, double jitter) {
    std::vector<std::pair<double, double>> p;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double x0 = kPad + (kW - 2 * kPad) * static_cast<double>(i) / n;
      const double x1 = kPad + (kW - 2 * kPad) * static_cast<double>(i + 1) / n;
      const double y = kH - kPad - (kH - 2 * kPad) * (static_cast<double>(a[i]) - 0.5) / 3.0 + jitter;
      p.emplace_back(x0, y);
      p.emplace_back(x1, y);
    }
    return p;
  };
  auto os = open_out(path);
  os << svg_open(title);
  for (int a = 1; a <= 3; ++a) {
    const double y = kH - kPad - (kH - 2 * kPad) * (a - 0.5) / 3.0;
    os << "<text x=\"4\" y=\"" << format_number(y + 4, 2) << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << to_string(static_cast<FilterAction>(a)) << "</text>\n";
  }
  os << polyline(pts(desired, 0.0), "#2a7", 3.0);
  os << polyline(pts(taken, 3.0), "#c33", 1.5);
  os << "<text x=\"" << kW - 200 << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#2a7\">desired</text>\n"
     << "<text x=\"" << kW - 130 << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c33\">taken</text>\n"
     << "</svg>\n";
}

void write_signal_svg(const std::filesystem::path& path, const SampledSignal& clean,
                      const SampledSignal& noisy, const SampledSignal& filtered,
                      const std::string& title, double seconds) {
  const std::size_t n = std::min({clean.size(), noisy.size(), filtered.size(),
                                  static_cast<std::size_t>(seconds * clean.rate())});
  if (n < 2) throw PreconditionError("write_signal_svg: nothing to plot");
  const std::size_t step = std::max<std::size_t>(1, n / 1000);
  double lim = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lim = std::max({lim, std::abs(clean[i]), std::abs(noisy[i]), std::abs(filtered[i])});
  }
  if (lim == 0.0) lim = 1.0;
  auto pts = [&](const SampledSignal& s) {
    std::vector<std::pair<double, double>> p;
    for (std::size_t i = 0; i < n; i += step) {
      p.emplace_back(kPad + (kW - 2 * kPad) * static_cast<double>(i) / static_cast<double>(n),
                     kH / 2 - (kH / 2 - kPad) * s[i] / lim);
    }
    return p;
  };
  auto os = open_out(path);
  os << svg_open(title) << polyline(pts(noisy), "#bbb", 1.0) << polyline(pts(clean), "#2a7", 1.0)
     << polyline(pts(filtered), "#c33", 1.0) << "</svg>\n";
}

}  // namespace emgdecon
