#pragma once

namespace stereomet {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kGenerator = "stereomet 0.1.0";

}  // namespace stereomet
