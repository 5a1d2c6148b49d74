#include "hnnkws/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "hnnkws/error.hpp"

namespace hnnkws {

std::vector<double> default_thresholds(std::span<const ScoredUtterance> scored) {
  std::vector<double> grid;
  grid.reserve(101 + scored.size());
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  for (const auto& s : scored) grid.push_back(s.confidence);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<RocPoint> sweep_roc(std::span<const ScoredUtterance> scored,
                                std::span<const double> thresholds) {
  std::vector<double> pos;
  std::vector<double> neg;
  double neg_seconds = 0.0;
  for (const auto& s : scored) {
    if (!std::isfinite(s.confidence)) throw NumericalError("non-finite confidence for " + s.id);
    if (s.is_positive) {
      pos.push_back(s.confidence);
    } else {
      neg.push_back(s.confidence);
      neg_seconds += s.duration_seconds;
    }
  }
  if (pos.empty()) throw ConfigError("roc: no positive utterances, recall is undefined");
  if (!(neg_seconds > 0.0)) throw ConfigError("roc: negative data has zero duration");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  const double neg_hours = neg_seconds / 3600.0;

  std::vector<double> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<RocPoint> out;
  out.reserve(sorted.size());
  auto at_least = [](const std::vector<double>& v, double thr) {
    return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), thr));
  };
  for (double thr : sorted) {
    out.push_back({thr, at_least(pos, thr) / static_cast<double>(pos.size()),
                   at_least(neg, thr) / neg_hours});
  }
  return out;
}

std::uint64_t model_macs(const KwsModel& model, OutputMode outputs) {
  if (const auto* hnn = std::get_if<HnnModel>(&model)) return hnn_macs(*hnn, outputs);
  return level_macs(std::get<BaselineModel>(model).net);
}

std::uint64_t model_params(const KwsModel& model, OutputMode outputs) {
  if (const auto* hnn = std::get_if<HnnModel>(&model)) return hnn_params(*hnn, outputs);
  return level_params(std::get<BaselineModel>(model).net);
}

std::vector<ComplexityRow> complexity_report(const Catalog& catalog) {
  std::vector<ComplexityRow> rows;
  auto reference = [](const CatalogEntry& e, const std::string& key) {
    const auto it = e.reported_macs.find(key);
    return it == e.reported_macs.end() ? std::string{} : it->second;
  };
  for (const auto& entry : catalog.entries) {
    if (entry.kind != CatalogKind::Hnn) {
      const KwsModel model = build_model(entry, std::nullopt, 0);
      rows.push_back({entry.name, std::nullopt, std::nullopt,
                      model_macs(model, OutputMode::ThirdOnly),
                      model_params(model, OutputMode::ThirdOnly), reference(entry, "")});
      continue;
    }
    for (OutputMode outputs : {OutputMode::AllLevels, OutputMode::ThirdOnly}) {
      for (BnWiring wiring : {BnWiring::AllBn, BnWiring::OneBn}) {
        const KwsModel model = build_model(entry, wiring, 0);
        rows.push_back({entry.name, wiring == BnWiring::AllBn, outputs == OutputMode::AllLevels,
                        model_macs(model, outputs), model_params(model, outputs),
                        reference(entry, variant_key(wiring, outputs))});
      }
    }
  }
  return rows;
}

std::optional<double> recall_at_fa(std::span<const RocPoint> roc, double fa) {
  if (roc.empty()) return std::nullopt;
  std::optional<double> exact;
  std::optional<double> lo_fa, lo_recall, hi_fa, hi_recall;
  for (const auto& p : roc) {
    if (p.fa_per_hour == fa) {
      exact = exact ? std::max(*exact, p.recall) : p.recall;
    } else if (p.fa_per_hour < fa) {
      if (!lo_fa || p.fa_per_hour > *lo_fa) {
        lo_fa = p.fa_per_hour;
        lo_recall = p.recall;
      } else if (p.fa_per_hour == *lo_fa) {
        lo_recall = std::max(*lo_recall, p.recall);
      }
    } else {
      if (!hi_fa || p.fa_per_hour < *hi_fa) {
        hi_fa = p.fa_per_hour;
        hi_recall = p.recall;
      } else if (p.fa_per_hour == *hi_fa) {
        hi_recall = std::min(*hi_recall, p.recall);
      }
    }
  }
  if (exact) return exact;
  if (!lo_fa || !hi_fa) return std::nullopt;
  const double w = (fa - *lo_fa) / (*hi_fa - *lo_fa);
  return *lo_recall + w * (*hi_recall - *lo_recall);
}

std::vector<SummaryRow> compare_models(std::span<const NamedRoc> rocs,
                                       std::span<const double> fa_points) {
  std::vector<const NamedRoc*> order;
  for (const auto& r : rocs) {
    if (r.points.empty()) throw ConfigError("compare: ROC for '" + r.name + "' is empty");
    order.push_back(&r);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const NamedRoc* a, const NamedRoc* b) { return a->name < b->name; });
  std::vector<double> points(fa_points.begin(), fa_points.end());
  std::sort(points.begin(), points.end());
  std::vector<SummaryRow> rows;
  for (double fa : points) {
    std::optional<std::size_t> best;
    for (const NamedRoc* r : order) {
      rows.push_back({fa, r->name, recall_at_fa(r->points, fa), false});
      const auto& row = rows.back();
      if (row.recall && (!best || *row.recall > *rows[*best].recall)) best = rows.size() - 1;
    }
    if (best) rows[*best].best = true;
  }
  return rows;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

void write_comment(std::ostream& out, const nlohmann::json& config) {
  nlohmann::json echo{{"tool_version", HNNKWS_VERSION}};
  if (!config.is_null()) echo["config"] = config;
  out << "# " << echo.dump() << '\n';
}

std::string flag(const std::optional<bool>& f) {
  if (!f) return "";
  return *f ? "1" : "0";
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

void write_roc_csv(std::ostream& out, std::span<const NamedRoc> rocs, const nlohmann::json& config) {
  write_comment(out, config);
  out << "model,threshold,recall,fa_per_hour\n";
  for (const auto& r : rocs) {
    for (const auto& p : r.points) {
      out << quoted(r.name) << ',' << format_double(p.threshold) << ',' << format_double(p.recall)
          << ',' << format_double(p.fa_per_hour) << '\n';
    }
  }
}

void write_complexity_csv(std::ostream& out, std::span<const ComplexityRow> rows,
                          const nlohmann::json& config) {
  write_comment(out, config);
  out << "model,all_bn,all_output,macs,params,paper_reference\n";
  for (const auto& r : rows) {
    out << quoted(r.model) << ',' << flag(r.all_bn) << ',' << flag(r.all_output) << ',' << r.macs
        << ',' << r.params << ',' << quoted(r.paper_reference) << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows,
                       const nlohmann::json& config) {
  write_comment(out, config);
  out << "fa_per_hour,model,recall,best\n";
  for (const auto& r : rows) {
    out << format_double(r.fa_point) << ',' << quoted(r.model) << ','
        << (r.recall ? format_double(*r.recall) : std::string("not_reached")) << ','
        << (r.best ? 1 : 0) << '\n';
  }
}

void write_decisions_csv(std::ostream& out, std::span<const DecodedUtterance> rows,
                         const nlohmann::json& config) {
  write_comment(out, config);
  out << "id,woke,wake_frame,confidence\n";
  for (const auto& r : rows) {
    out << quoted(r.id) << ',' << (r.decision.woke ? 1 : 0) << ','
        << (r.decision.wake_frame ? std::to_string(*r.decision.wake_frame) : std::string()) << ','
        << format_double(r.decision.confidence) << '\n';
  }
}

}  // namespace hnnkws
