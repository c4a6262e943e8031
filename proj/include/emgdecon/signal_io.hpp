#pragma once

#include <filesystem>

#include "emgdecon/signal.hpp"

namespace emgdecon {

// "SEMG1\0", u32 rate, u64 count, then f32 samples; all little-endian.
void write_semg1(const std::filesystem::path& path, const SampledSignal& sig);
SampledSignal read_semg1(const std::filesystem::path& path);

// One sample per line under a `sample` header. The rate is not stored.
void write_signal_csv(const std::filesystem::path& path, const SampledSignal& sig);
SampledSignal read_signal_csv(const std::filesystem::path& path, double rate = kSampleRate);

}  // namespace emgdecon
