#pragma once

namespace alqmle {

inline constexpr const char* kArtifactName = "alqmle";
inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace alqmle
