#include "hnnkws/decoder.hpp"

#include <algorithm>

#include "hnnkws/error.hpp"

namespace hnnkws {

std::string_view to_string(DecodeLabel label) {
  switch (label) {
    case DecodeLabel::Sil: return "sil";
    case DecodeLabel::W1: return "w1";
    case DecodeLabel::W2: return "w2";
    case DecodeLabel::W3: return "w3";
    case DecodeLabel::Other: return "other";
  }
  return "?";
}

std::string_view to_string(FstState state) {
  switch (state) {
    case FstState::Sil: return "Sil";
    case FstState::W1: return "W1";
    case FstState::W2: return "W2";
    case FstState::W3Waked: return "W3_Waked";
  }
  return "?";
}

void validate(const DecoderParams& params) {
  if (params.smooth_window < 1) throw ConfigError("decoder: smooth window must be >= 1");
  if (!(params.class_threshold > 0.0 && params.class_threshold < 1.0)) {
    throw ConfigError("decoder: class threshold must lie in (0, 1)");
  }
  if (params.max_gap < 1) throw ConfigError("decoder: max gap must be >= 1");
  if (params.refractory < 1) throw ConfigError("decoder: refractory must be >= 1");
}

FstStep fst_step(FstCursor cursor, DecodeLabel label, int max_gap) {
  const bool idle = cursor.state == FstState::Sil || cursor.state == FstState::W3Waked;
  if (label == DecodeLabel::W1) return {{FstState::W1, 0}, false};
  if (idle) return {{cursor.state, 0}, false};
  switch (label) {
    case DecodeLabel::Sil:
    case DecodeLabel::Other:
      if (cursor.gap + 1 > max_gap) return {{FstState::Sil, 0}, false};
      return {{cursor.state, cursor.gap + 1}, false};
    case DecodeLabel::W2:
      return {{FstState::W2, 0}, false};
    case DecodeLabel::W3:
      if (cursor.state == FstState::W2) return {{FstState::W3Waked, 0}, true};
      return {{FstState::Sil, 0}, false};
    default:
      return {{FstState::Sil, 0}, false};
  }
}

PosteriorStream smooth(std::span<const PosteriorFrame> stream, int w) {
  if (w < 1) throw ConfigError("smooth: window must be >= 1");
  PosteriorStream out(stream.size());
  const std::size_t width = static_cast<std::size_t>(w);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const std::size_t lo = t + 1 >= width ? t + 1 - width : 0;
    PosteriorFrame acc{};
    for (std::size_t u = lo; u <= t; ++u) {
      for (int c = 0; c < kNumClasses; ++c) acc[c] += stream[u][c];
    }
    const double n = static_cast<double>(t - lo + 1);
    for (int c = 0; c < kNumClasses; ++c) out[t][c] = acc[c] / n;
  }
  return out;
}

DecodeLabel classify_frame(const PosteriorFrame& p, double threshold) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return p[best] >= threshold ? static_cast<DecodeLabel>(best) : DecodeLabel::Other;
}

namespace {

// Per-state peak posteriors of the keyword attempt currently under way.
struct Candidate {
  double peak[3] = {0.0, 0.0, 0.0};
  bool reached_w2 = false;
  double score() const { return std::min({peak[0], peak[1], peak[2]}); }
};

struct Run {
  std::vector<std::size_t> wakes;
  double confidence = 0.0;
};

template <typename FrameAt>
Run run_acceptor(std::size_t n, int max_gap, int refractory, FrameAt&& frame_at) {
  Run run;
  FstCursor cursor;
  Candidate cand;
  bool active = false;
  auto close = [&] {
    if (active && cand.reached_w2) run.confidence = std::max(run.confidence, cand.score());
    cand = Candidate{};
    active = false;
  };
  std::size_t resume = 0;
  // After a wake the w3 peak keeps tracking the w3 run that triggered it;
  // this only refines the confidence, never the decision.
  bool tail = false;
  for (std::size_t t = 0; t < n; ++t) {
    const auto [label, post] = frame_at(t);
    if (tail) {
      if (label == DecodeLabel::W3 && post) {
        cand.peak[2] = std::max(cand.peak[2], (*post)[3]);
      } else {
        tail = false;
        close();
      }
    }
    if (t < resume) continue;
    if (tail) {
      tail = false;
      close();
    }
    const FstState before = cursor.state;
    const FstStep step = fst_step(cursor, label, max_gap);
    cursor = step.next;
    if (step.wake) {
      if (post) cand.peak[2] = std::max(cand.peak[2], (*post)[3]);
      run.wakes.push_back(t);
      tail = true;
      cursor = {};
      resume = t + static_cast<std::size_t>(refractory);
      continue;
    }
    const bool restart = cursor.state == FstState::W1 && before != FstState::W1;
    if (restart || cursor.state == FstState::Sil) close();
    if (cursor.state == FstState::W1 || cursor.state == FstState::W2) {
      active = true;
      if (!post) continue;
      if (cursor.state == FstState::W1) {
        cand.peak[0] = std::max(cand.peak[0], (*post)[1]);
      } else {
        cand.reached_w2 = true;
        cand.peak[1] = std::max(cand.peak[1], (*post)[2]);
        cand.peak[2] = std::max(cand.peak[2], (*post)[3]);
      }
    }
  }
  close();
  return run;
}

Decision to_decision(Run run) {
  Decision d;
  d.woke = !run.wakes.empty();
  if (d.woke) d.wake_frame = run.wakes.front();
  d.confidence = run.confidence;
  d.wakes = std::move(run.wakes);
  return d;
}

}  // namespace

std::vector<std::size_t> accept_labels(std::span<const DecodeLabel> labels, int max_gap,
                                       int refractory) {
  const PosteriorFrame* none = nullptr;
  return run_acceptor(labels.size(), max_gap, refractory, [&](std::size_t t) {
           return std::pair{labels[t], none};
         }).wakes;
}

Decision decode_stream(std::span<const PosteriorFrame> stream, const DecoderParams& params) {
  validate(params);
  const PosteriorStream smoothed = smooth(stream, params.smooth_window);
  return to_decision(
      run_acceptor(smoothed.size(), params.max_gap, params.refractory, [&](std::size_t t) {
        return std::pair{classify_frame(smoothed[t], params.class_threshold), &smoothed[t]};
      }));
}

Decision decode(std::span<const PosteriorStream> streams, CombinationStrategy strategy,
                const DecoderParams& params) {
  if (strategy != CombinationStrategy::AnyLevelWakes) {
    if (streams.size() != 1) {
      throw ConfigError("decode: strategy " + std::string(to_string(strategy)) +
                        " expects one combined stream, got " + std::to_string(streams.size()));
    }
    return decode_stream(streams[0], params);
  }
  if (streams.size() != 3) {
    throw ConfigError("decode: any-level strategy expects three level streams, got " +
                      std::to_string(streams.size()));
  }
  Decision out;
  for (const auto& s : streams) {
    Decision d = decode_stream(s, params);
    out.confidence = std::max(out.confidence, d.confidence);
    if (d.woke && (!out.wake_frame || *d.wake_frame < *out.wake_frame)) out.wake_frame = d.wake_frame;
    out.wakes.insert(out.wakes.end(), d.wakes.begin(), d.wakes.end());
  }
  // Merge the level wakes, keeping the refractory spacing across levels too.
  std::sort(out.wakes.begin(), out.wakes.end());
  std::vector<std::size_t> merged;
  for (std::size_t t : out.wakes) {
    if (merged.empty() || t >= merged.back() + static_cast<std::size_t>(params.refractory)) {
      merged.push_back(t);
    }
  }
  out.wakes = std::move(merged);
  out.woke = out.wake_frame.has_value();
  return out;
}

}  // namespace hnnkws
