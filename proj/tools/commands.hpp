#pragma once

namespace nlos::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kBadInput = 2;
inline constexpr int kEmptyDomain = 3;
inline constexpr int kNoOverlap = 4;
inline constexpr int kNonFinite = 5;

int run(int argc, char **argv);

} // namespace nlos::cli
