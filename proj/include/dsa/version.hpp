#pragma once

namespace dsa {

inline constexpr const char* kArtifactName = "dsa";
inline constexpr const char* kArtifactVersion = "0.1.0";

} // namespace dsa
