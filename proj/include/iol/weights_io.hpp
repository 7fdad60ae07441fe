#pragma once

// Text persistence of network parameters, input normalisation and optional
// Adam state. Values are written with %.17g so a round trip is bit-exact.
// The last line is an FNV-1a checksum over every preceding byte; a missing
// or mismatching checksum, a version or shape mismatch, or a malformed line
// raises a corrupt_file error.

#include <filesystem>
#include <optional>
#include <string>

#include "iol/network.hpp"

namespace iol {

inline constexpr int kWeightsFormatVersion = 1;

struct SavedNetwork {
  NetParams params;
  std::optional<AdamState> adam;

  friend bool operator==(const SavedNetwork&, const SavedNetwork&) = default;
};

std::string weights_text(const SavedNetwork& net);
SavedNetwork parse_weights(const std::string& text, const std::string& source = "<memory>");

void save_weights(const std::filesystem::path& path, const SavedNetwork& net);
SavedNetwork load_weights(const std::filesystem::path& path);

}  // namespace iol
