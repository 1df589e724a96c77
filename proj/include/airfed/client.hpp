#pragma once

#include <cstddef>

#include "airfed/compression.hpp"
#include "airfed/model.hpp"

namespace airfed {

/// Everything one client owns. Never shared between clients.
struct ClientState {
  std::size_t id = 0;
  Dataset data;
  ParamVector local;
  EncoderState codec;
  double delay_mean = 0.0;
  double delay_jitter = 0.0;
  BatchSampler sampler;
};

}  // namespace airfed
