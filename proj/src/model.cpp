// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/model.hpp"

#include <cmath>
#include <string>

#include "uwmmse/error.hpp"
#include "model_detail.hpp"

namespace uwmmse {

void SystemConfig::validate() const {
  if (antennas < 1 || users < 1)
    throw Error(ErrorCode::kInvalidArgument, "SystemConfig: M and N must be at least 1");
  if (!(max_power > 0.0) || !std::isfinite(max_power))
    throw Error(ErrorCode::kInvalidArgument, "SystemConfig: max_power must be positive");
  if (!(noise_power > 0.0) || !std::isfinite(noise_power))
    throw Error(ErrorCode::kInvalidArgument, "SystemConfig: noise_power must be positive");
  if (priorities.size() != users)
    throw Error(ErrorCode::kInvalidArgument,
                "SystemConfig: expected " + std::to_string(users) + " priorities");
  for (double a : priorities)
    if (!(a > 0.0))
      throw Error(ErrorCode::kInvalidArgument, "SystemConfig: priorities must be positive");
}

SystemConfig SystemConfig::from_snr_db(double snr_db, std::size_t antennas,
                                       std::size_t users) {
  SystemConfig cfg;
  cfg.antennas = antennas;
  cfg.users = users;
  cfg.noise_power = 1.0;
  cfg.max_power = std::pow(10.0, snr_db / 10.0);
  cfg.priorities.assign(users, 1.0);
  return cfg;
}

namespace {

// SplitMix64 finalizer; decorrelates neighbouring (seed, stream) pairs before
// they reach the engine's own seeding.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::mt19937_64 RngStream::engine() const {
  return std::mt19937_64(mix64(mix64(seed) ^ stream));
}

RngStream sample_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index) {
  return RngStream{seed, (static_cast<std::uint64_t>(domain) << 56) ^ index};
}

Channel sample_channel(const SystemConfig& cfg, const RngStream& rng) {
  auto engine = rng.engine();
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Channel out{CMatrix(cfg.users, cfg.antennas)};
  for (cplx& x : out.h.entries()) {
    const double re = normal(engine);
    const double im = normal(engine);
    x = {re, im};
  }
  return out;
}

CMatrix channel_gains(const Channel& h, const Beamformer& v) {
  if (h.antennas() != v.antennas() || h.users() != v.users())
    throw Error(ErrorCode::kDimension, "channel_gains: channel and beamformer shapes differ");
  const std::size_t n = h.users();
  CMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = dot_conj(h.h.row(i), v.v.row(j));
  return s;
}

double sinr(const Channel& h, const Beamformer& v, const SystemConfig& cfg, std::size_t i) {
  detail::check_instance(h, v, cfg);
  if (i >= h.users())
    throw Error(ErrorCode::kIndexOutOfRange,
                "sinr: user index " + std::to_string(i) + " out of range");
  double interference = cfg.noise_power;
  double signal = 0.0;
  for (std::size_t j = 0; j < h.users(); ++j) {
    const double g = std::norm(dot_conj(h.h.row(i), v.v.row(j)));
    if (j == i)
      signal = g;
    else
      interference += g;
  }
  return signal / interference;
}

double wsr(const Channel& h, const Beamformer& v, const SystemConfig& cfg) {
  detail::check_instance(h, v, cfg);
  const CMatrix s = channel_gains(h, v);
  double total = 0.0;
  for (std::size_t i = 0; i < h.users(); ++i) {
    double interference = cfg.noise_power;
    for (std::size_t j = 0; j < h.users(); ++j)
      if (j != i) interference += std::norm(s(i, j));
    total += cfg.priorities[i] * std::log2(1.0 + std::norm(s(i, i)) / interference);
  }
  return total;
}

Beamformer matched_filter_init(const Channel& h, const SystemConfig& cfg) {
  detail::check_channel(h, cfg);
  const double energy = trace_gram(h.h);
  if (!(energy > 0.0))
    throw Error(ErrorCode::kDegenerateInput, "matched_filter_init: all-zero channel");
  return Beamformer{h.h * cplx(std::sqrt(cfg.max_power / energy))};
}

}  // namespace uwmmse
