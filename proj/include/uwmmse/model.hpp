// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "uwmmse/numkit.hpp"

namespace uwmmse {

/// Dimensions and physical constants of one MISO downlink instance.
struct SystemConfig {
  std::size_t antennas = 4;  // M
  std::size_t users = 4;     // N
  double max_power = 10.0;   // P
  double noise_power = 1.0;  // σ²
  std::vector<double> priorities = std::vector<double>(4, 1.0);  // α

  /// Throws kInvalidArgument unless M, N ≥ 1, P, σ² > 0 and α > 0.
  void validate() const;

  /// Unit noise, P = 10^(snr/10), unit priorities.
  static SystemConfig from_snr_db(double snr_db, std::size_t antennas = 4,
                                  std::size_t users = 4);
};

/// N×M channel; row i holds h_iᵀ so that h_iᴴ v = Σ_m conj(H(i,m)) v_m.
struct Channel {
  CMatrix h;
  std::size_t users() const noexcept { return h.rows(); }
  std::size_t antennas() const noexcept { return h.cols(); }
};

/// N×M transmit weights; row i holds v_iᵀ.
struct Beamformer {
  CMatrix v;
  std::size_t users() const noexcept { return v.rows(); }
  std::size_t antennas() const noexcept { return v.cols(); }
};

/// Identifies an independent random stream. The same (seed, stream) pair
/// always yields the same draws on a given build.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::mt19937_64 engine() const;
};

/// Stream ids for distinct experiment roles, so that training and test
/// channels never overlap even under one seed.
enum class StreamDomain : std::uint64_t { kTest = 0, kTrain = 1, kProbe = 2 };

RngStream sample_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index);

/// i.i.d. CN(0, 1) entries: real and imaginary parts ~ Normal(0, 1/2).
Channel sample_channel(const SystemConfig& cfg, const RngStream& rng);

/// h_iᴴ v_j for all (i, j), returned as an N×N matrix.
CMatrix channel_gains(const Channel& h, const Beamformer& v);

/// SINR of user i (zero-based).
double sinr(const Channel& h, const Beamformer& v, const SystemConfig& cfg, std::size_t i);

/// Σ α_i log2(1 + SINR_i).
double wsr(const Channel& h, const Beamformer& v, const SystemConfig& cfg);

/// V = a·H with a chosen so that Tr(V Vᴴ) = P. Throws kDegenerateInput on an
/// all-zero channel.
Beamformer matched_filter_init(const Channel& h, const SystemConfig& cfg);

}  // namespace uwmmse
