#include "hnnkws/types.hpp"

#include <string>

#include "hnnkws/error.hpp"

namespace hnnkws {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Sil: return "sil";
    case Label::W1: return "w1";
    case Label::W2: return "w2";
    case Label::W3: return "w3";
  }
  return "?";
}

std::string_view to_string(Environment env) {
  switch (env) {
    case Environment::Quiet: return "quiet";
    case Environment::Video: return "video";
    case Environment::Incar: return "incar";
  }
  return "?";
}

std::string_view to_string(CombinationStrategy strategy) {
  switch (strategy) {
    case CombinationStrategy::ThirdOnly: return "ThirdOnly";
    case CombinationStrategy::AnyLevelWakes: return "AnyLevelWakes";
    case CombinationStrategy::AveragePosteriors: return "AveragePosteriors";
  }
  return "?";
}

std::string_view short_name(CombinationStrategy strategy) {
  switch (strategy) {
    case CombinationStrategy::ThirdOnly: return "third";
    case CombinationStrategy::AnyLevelWakes: return "any";
    case CombinationStrategy::AveragePosteriors: return "avg";
  }
  return "?";
}

std::string_view to_string(OutputMode mode) {
  return mode == OutputMode::ThirdOnly ? "third" : "all";
}

Environment environment_from_string(std::string_view name) {
  for (Environment env : kEnvironments) {
    if (to_string(env) == name) return env;
  }
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

CombinationStrategy strategy_from_string(std::string_view name) {
  for (auto s : {CombinationStrategy::ThirdOnly, CombinationStrategy::AnyLevelWakes,
                 CombinationStrategy::AveragePosteriors}) {
    if (short_name(s) == name || to_string(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected third|any|avg)");
}

OutputMode output_mode_from_string(std::string_view name) {
  if (name == "third") return OutputMode::ThirdOnly;
  if (name == "all") return OutputMode::AllLevels;
  throw ConfigError("unknown output mode '" + std::string(name) + "' (expected third|all)");
}

}  // namespace hnnkws
