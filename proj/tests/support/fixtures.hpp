#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "enrolcast/adapters.hpp"
#include "enrolcast/timebase.hpp"

namespace enrolcast::testing {

std::string data_path(const std::string& name);
std::string stub_adapter_path();

/// Two cohorts over 2007..2025 plus regimes "google_trends" (four
/// engineered features) and "ioci". Values are seeded and deterministic.
Dataset synthetic_dataset(std::uint64_t seed = 7);

/// Same dataset written to a directory; returns the manifest path.
std::string write_synthetic_dataset(const std::string& dir, std::uint64_t seed = 7);

/// Descriptor that runs the stub adapter in the given mode.
AdapterDescriptor stub_descriptor(const std::string& name, const std::string& args,
                                  int timeout_seconds = 10);

/// Fresh directory under the system temp dir.
std::string scratch_dir(const std::string& tag);

}  // namespace enrolcast::testing
