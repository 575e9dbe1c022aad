#include "ocs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "ocs/error.hpp"

namespace ocs {

namespace {

void check_inputs(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty()) throw Error("evaluation: ID score list is empty");
  if (ood_scores.empty()) throw Error("evaluation: OOD score list is empty");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(id_scores.begin(), id_scores.end(), finite) ||
      !std::all_of(ood_scores.begin(), ood_scores.end(), finite))
    throw Error("evaluation: scores must be finite");
}

}  // namespace

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  check_inputs(id_scores, ood_scores);
  struct Item {
    double value;
    bool ood;
  };
  std::vector<Item> items;
  items.reserve(id_scores.size() + ood_scores.size());
  for (double v : id_scores) items.push_back({v, false});
  for (double v : ood_scores) items.push_back({v, true});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.value < b.value; });

  // Ranks are 1-based; a tie block spanning positions [i, j) gets rank (i + j + 1) / 2.
  // Doubled ranks keep the Mann-Whitney count an exact integer.
  std::uint64_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    std::uint64_t ood_in_block = 0;
    while (j < items.size() && items[j].value == items[i].value) ood_in_block += items[j++].ood;
    twice_rank_sum += ood_in_block * (i + j + 1);
    i = j;
  }
  const std::uint64_t n_id = id_scores.size();
  const std::uint64_t n_ood = ood_scores.size();
  const std::uint64_t twice_u = twice_rank_sum - n_ood * (n_ood + 1);
  const std::uint64_t twice_pairs = 2 * n_id * n_ood;
  // Dividing the larger half and subtracting from 1 for the smaller one makes
  // auroc(a, b) == 1 - auroc(b, a) hold exactly in floating point.
  if (2 * twice_u >= twice_pairs) return static_cast<double>(twice_u) / static_cast<double>(twice_pairs);
  return 1.0 - static_cast<double>(twice_pairs - twice_u) / static_cast<double>(twice_pairs);
}

std::vector<CurvePoint> threshold_sweep(std::span<const double> id_scores, std::span<const double> ood_scores) {
  check_inputs(id_scores, ood_scores);
  std::vector<std::pair<double, bool>> items;
  items.reserve(id_scores.size() + ood_scores.size());
  for (double v : id_scores) items.emplace_back(v, false);
  for (double v : ood_scores) items.emplace_back(v, true);
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  const double n_id = static_cast<double>(id_scores.size());
  const double n_ood = static_cast<double>(ood_scores.size());
  std::vector<CurvePoint> curve;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    const double threshold = items[i].first;
    while (i < items.size() && items[i].first == threshold) {
      if (items[i].second) ++tp; else ++fp;
      ++i;
    }
    CurvePoint p;
    p.threshold = threshold;
    p.true_positives = tp;
    p.false_positives = fp;
    p.tpr = static_cast<double>(tp) / n_ood;
    p.fpr = static_cast<double>(fp) / n_id;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.push_back(p);
  }
  return curve;
}

double aupr(std::span<const double> id_scores, std::span<const double> ood_scores) {
  const auto curve = threshold_sweep(id_scores, ood_scores);
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : curve) {
    area += (p.tpr - prev_recall) * p.precision;
    prev_recall = p.tpr;
  }
  return area;
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target) {
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) throw Error("evaluation: TPR target must lie in (0, 1]");
  const auto curve = threshold_sweep(id_scores, ood_scores);
  for (const auto& p : curve)
    if (p.tpr >= tpr_target) return p.fpr;
  return curve.back().fpr;  // unreachable: the last point has TPR = 1
}

Histogram score_histogram(std::span<const double> id_scores, std::span<const double> ood_scores, int bins) {
  check_inputs(id_scores, ood_scores);
  if (bins < 1) throw Error("evaluation: histogram needs at least one bin");
  const auto [id_lo, id_hi] = std::minmax_element(id_scores.begin(), id_scores.end());
  const auto [ood_lo, ood_hi] = std::minmax_element(ood_scores.begin(), ood_scores.end());
  const double lo = std::min(*id_lo, *ood_lo);
  const double hi = std::max(*id_hi, *ood_hi);
  const double width = (hi - lo) / bins;

  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + width * b;
  h.edges.back() = hi;
  h.id_counts.assign(static_cast<std::size_t>(bins), 0);
  h.ood_counts.assign(static_cast<std::size_t>(bins), 0);
  auto bin_of = [&](double v) -> std::size_t {
    if (!(width > 0.0)) return 0;
    const auto b = static_cast<long long>(std::floor((v - lo) / width));
    return static_cast<std::size_t>(std::clamp<long long>(b, 0, bins - 1));
  };
  for (double v : id_scores) ++h.id_counts[bin_of(v)];
  for (double v : ood_scores) ++h.ood_counts[bin_of(v)];
  return h;
}

EvalReport evaluate(const std::string& scorer, std::span<const double> id_scores, std::span<const double> ood_scores,
                    int bins, double tpr_target) {
  EvalReport r;
  r.scorer = scorer;
  r.auroc = auroc(id_scores, ood_scores);
  r.aupr = aupr(id_scores, ood_scores);
  r.fpr_at_95 = fpr_at_tpr(id_scores, ood_scores, tpr_target);
  r.tpr_target = tpr_target;
  r.n_id = id_scores.size();
  r.n_ood = ood_scores.size();
  r.histogram = score_histogram(id_scores, ood_scores, bins);
  r.curve = threshold_sweep(id_scores, ood_scores);
  return r;
}

EvalReport make_report(const std::vector<ScoreRecord>& id_records, const std::vector<ScoreRecord>& ood_records, int bins,
                       double tpr_target) {
  if (id_records.empty() || ood_records.empty()) throw Error("evaluation: empty score set");
  const Scorer scorer = id_records.front().scorer;
  auto values = [&](const std::vector<ScoreRecord>& records, const char* which) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) {
      if (r.scorer != scorer)
        throw Error(std::string("evaluation: scorer mismatch, expected ") + to_string(scorer) + " but " + which +
                    " set contains " + to_string(r.scorer));
      v.push_back(r.value);
    }
    return v;
  };
  const auto id = values(id_records, "ID");
  const auto ood = values(ood_records, "OOD");
  return evaluate(to_string(scorer), id, ood, bins, tpr_target);
}

}  // namespace ocs
