#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace codeplex {

/// 64-bit FNV-1a. Stable across platforms, used for every fingerprint and digest.
std::uint64_t fnv1a64(std::string_view data) noexcept;

/// fnv1a64 rendered as 16 lowercase hex digits.
std::string hex_digest(std::string_view data);

/// Rounds to 12 significant digits so serialized reports are platform stable.
double round12(double value);

/// Standard normal CDF.
double normal_cdf(double x) noexcept;

}  // namespace codeplex
