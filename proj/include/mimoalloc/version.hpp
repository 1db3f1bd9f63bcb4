#pragma once

namespace mimoalloc {

#ifdef MIMOALLOC_GIT_REV
inline constexpr const char* kVersion = "0.1.0+" MIMOALLOC_GIT_REV;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

}  // namespace mimoalloc
