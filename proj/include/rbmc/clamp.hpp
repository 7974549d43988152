#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rbmc/rbm.hpp"

namespace rbmc {

// Partial assignment of visible terminals held fixed during inference.
struct ClampMask {
  std::map<std::string, std::uint8_t> assignments;
};

// A clamp resolved against a particular model.
struct ResolvedClamp {
  Bits base;                       // full visible vector, clamped values set, free units 0
  std::vector<std::uint8_t> fixed;  // 1 where clamped
  std::vector<std::size_t> free;    // free visible indices, ascending

  bool consistent(std::span<const std::uint8_t> v) const;
};

// Throws UnknownTerminal for names absent from the model and InvalidArgument
// for values other than 0/1.
ResolvedClamp resolve(const Rbm& rbm, const ClampMask& clamp);

}  // namespace rbmc
