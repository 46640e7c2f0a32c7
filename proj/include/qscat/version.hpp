#pragma once

namespace qscat {

inline constexpr const char* kArtifactName = "qscat";
inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace qscat
