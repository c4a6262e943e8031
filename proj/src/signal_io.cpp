#include "emgdecon/signal_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "emgdecon/error.hpp"

namespace emgdecon {

namespace {

constexpr std::array<char, 6> kMagic = {'S', 'E', 'M', 'G', '1', '\0'};

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw IoError("truncated file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_semg1(const std::filesystem::path& path, const SampledSignal& sig) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  const double rate = std::round(sig.rate());
  if (rate != sig.rate() || rate > 4294967295.0) {
    throw PreconditionError("SEMG1: rate must be an integer number of Hz");
  }
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(rate));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(sig.size()));
  for (double v : sig.samples()) put_le<float>(os, static_cast<float>(v));
  if (!os) throw IoError("write failed: " + path.string());
}

SampledSignal read_semg1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::array<char, 6> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("not a SEMG1 file: " + path.string());
  }
  const auto rate = get_le<std::uint32_t>(is);
  const auto count = get_le<std::uint64_t>(is);
  std::vector<double> samples;
  samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) samples.push_back(get_le<float>(is));
  return SampledSignal(std::move(samples), static_cast<double>(rate));
}

void write_signal_csv(const std::filesystem::path& path, const SampledSignal& sig) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "sample\n";
  os.precision(17);
  for (double v : sig.samples()) os << v << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

SampledSignal read_signal_csv(const std::filesystem::path& path, double rate) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("sample", 0) != 0) {
    throw IoError("CSV signal must start with a `sample` header: " + path.string());
  }
  std::vector<double> samples;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    try {
      samples.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw IoError("bad CSV sample: " + line);
    }
  }
  return SampledSignal(std::move(samples), rate);
}

}  // namespace emgdecon

#include "emgdecon/blob_io.hpp"

namespace emgdecon {

void write_f64_blob(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  for (double v : values) put_le<double>(os, v);
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<double> read_f64_blob(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot open: " + path.string());
  if (size % 8 != 0) throw IoError("blob size is not a multiple of 8: " + path.string());
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::vector<double> out(size / 8);
  for (auto& v : out) v = get_le<double>(is);
  return out;
}

}  // namespace emgdecon
