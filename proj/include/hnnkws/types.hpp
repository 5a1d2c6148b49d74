#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace hnnkws {

inline constexpr int kFrameDim = 40;
inline constexpr int kContext = 5;  // frames on each side of the center ("5-1-5")
inline constexpr int kWindowFrames = 2 * kContext + 1;
inline constexpr int kWindowDim = kWindowFrames * kFrameDim;
inline constexpr int kNumClasses = 4;
inline constexpr double kFrameSeconds = 0.010;

// Frame class: silence and the three word states of the keyword.
enum class Label : std::uint8_t { Sil = 0, W1 = 1, W2 = 2, W3 = 3 };

enum class Environment : std::uint8_t { Quiet = 0, Video = 1, Incar = 2 };

inline constexpr std::array<Environment, 3> kEnvironments = {Environment::Quiet,
                                                             Environment::Video,
                                                             Environment::Incar};

enum class CombinationStrategy { ThirdOnly, AnyLevelWakes, AveragePosteriors };

// Which level outputs hnn_forward computes.
enum class OutputMode { ThirdOnly, AllLevels };

// Per-class probabilities for one frame (sil, w1, w2, w3).
using PosteriorFrame = std::array<double, kNumClasses>;

std::string_view to_string(Label label);
std::string_view to_string(Environment env);
std::string_view to_string(CombinationStrategy strategy);
std::string_view to_string(OutputMode mode);

Environment environment_from_string(std::string_view name);
CombinationStrategy strategy_from_string(std::string_view name);  // third|any|avg
OutputMode output_mode_from_string(std::string_view name);        // third|all

// Short CLI spelling of a strategy (third, any, avg).
std::string_view short_name(CombinationStrategy strategy);

}  // namespace hnnkws
