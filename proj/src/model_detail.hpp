// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "uwmmse/error.hpp"
#include "uwmmse/model.hpp"

namespace uwmmse::detail {

inline void check_channel(const Channel& h, const SystemConfig& cfg) {
  if (h.users() != cfg.users || h.antennas() != cfg.antennas)
    throw Error(ErrorCode::kDimension, "channel shape does not match the system config");
  if (cfg.priorities.size() != cfg.users)
    throw Error(ErrorCode::kInvalidArgument, "priority count does not match users");
}

inline void check_instance(const Channel& h, const Beamformer& v, const SystemConfig& cfg) {
  check_channel(h, cfg);
  if (v.users() != cfg.users || v.antennas() != cfg.antennas)
    throw Error(ErrorCode::kDimension, "beamformer shape does not match the system config");
}

}  // namespace uwmmse::detail
