#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace enrolcast {

/// 64-bit FNV-1a. Stable across platforms; used to name runs and to stamp
/// every output artifact with the run manifest it came from.
std::uint64_t fnv1a64(std::string_view data);
std::string hash_hex(std::string_view data);

}  // namespace enrolcast
