#pragma once

#include <filesystem>
#include <string>

#include "ulab/network.hpp"

namespace ulab::nn {

inline constexpr int kCheckpointVersion = 1;

// JSON record {"format","version","input_dim","layers":[{"out","activation"}],
// "parameter_count","params":[...]}. Doubles are written in shortest
// round-trip form, so save/load is bit-exact.
std::string checkpoint_to_json(const Network& net);
// Throws FormatError on malformed input or a version/shape mismatch.
Network checkpoint_from_json(const std::string& text);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace ulab::nn
