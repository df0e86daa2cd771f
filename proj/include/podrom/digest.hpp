#pragma once

#include <bit>
#include <cstdint>

namespace podrom
{

/// FNV-1a over 64-bit words, used for mesh/space/basis signatures.
class Digest
{
public:
  Digest &add(std::uint64_t value)
  {
    for (int i = 0; i < 8; ++i)
      {
        h_ ^= (value >> (8 * i)) & 0xffu;
        h_ *= 1099511628211ull;
      }
    return *this;
  }
  Digest &add(double value) { return add(std::bit_cast<std::uint64_t>(value)); }
  Digest &add(int value) { return add(static_cast<std::uint64_t>(static_cast<std::int64_t>(value))); }

  std::uint64_t value() const { return h_; }

private:
  std::uint64_t h_ = 1469598103934665603ull;
};

} // namespace podrom
