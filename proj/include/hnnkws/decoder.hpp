#pragma once

// Posterior stream -> wake decision. Each stream is smoothed with a trailing
// moving average, every frame is mapped to sil/w1/w2/w3/other, and a linear
// keyword acceptor (Sil -> W1 -> W2 -> wake) consumes the labels.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hnnkws/types.hpp"

namespace hnnkws {

using PosteriorStream = std::vector<PosteriorFrame>;

enum class DecodeLabel : std::uint8_t { Sil = 0, W1 = 1, W2 = 2, W3 = 3, Other = 4 };
enum class FstState : std::uint8_t { Sil, W1, W2, W3Waked };

std::string_view to_string(DecodeLabel label);
std::string_view to_string(FstState state);

struct DecoderParams {
  int smooth_window = 10;
  double class_threshold = 0.5;
  int max_gap = 30;       // sil/other frames tolerated between word states
  int refractory = 100;   // frames after a wake before the acceptor re-arms
  bool operator==(const DecoderParams&) const = default;
};

// Throws ConfigError unless every field is positive and class_threshold < 1.
void validate(const DecoderParams& params);

// FST position: current state plus sil/other frames seen since the last word label.
struct FstCursor {
  FstState state = FstState::Sil;
  int gap = 0;
  bool operator==(const FstCursor&) const = default;
};

struct FstStep {
  FstCursor next;
  bool wake = false;
};

// One acceptor transition. W3Waked behaves like Sil.
FstStep fst_step(FstCursor cursor, DecodeLabel label, int max_gap);

// output[t] = mean of input[max(0, t-w+1) .. t]. Throws ConfigError when w < 1.
PosteriorStream smooth(std::span<const PosteriorFrame> stream, int w);

// Argmax class when its probability reaches `threshold`, else Other.
// Ties go to the lower class index.
DecodeLabel classify_frame(const PosteriorFrame& p, double threshold);

struct Decision {
  bool woke = false;
  std::optional<std::size_t> wake_frame;  // first wake
  double confidence = 0.0;
  std::vector<std::size_t> wakes;  // every wake, refractory applied
  bool operator==(const Decision&) const = default;
};

// Single-stream pipeline: smooth, classify, run the acceptor.
Decision decode_stream(std::span<const PosteriorFrame> stream, const DecoderParams& params);

// Label-level acceptor run (no smoothing, no confidence); used by tests and oracles.
std::vector<std::size_t> accept_labels(std::span<const DecodeLabel> labels, int max_gap,
                                       int refractory);

// ThirdOnly / AveragePosteriors take one stream, AnyLevelWakes takes three.
// Throws ConfigError on a stream-count mismatch.
Decision decode(std::span<const PosteriorStream> streams, CombinationStrategy strategy,
                const DecoderParams& params);

}  // namespace hnnkws
