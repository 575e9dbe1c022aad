#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ocs/scoring.hpp"

namespace ocs {

// OOD samples are the positive class throughout; a sample is flagged OOD
// when its score is >= the threshold.

/// P(ood > id) + 0.5 P(tie) via mid-ranks.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Average precision: sum over distinct thresholds of (R_i - R_{i-1}) * P_i.
double aupr(std::span<const double> id_scores, std::span<const double> ood_scores);

/// FPR on ID at the largest threshold whose TPR on OOD reaches `tpr_target`.
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target = 0.95);

/// Operating point after flagging everything with score >= threshold.
struct CurvePoint {
  double threshold = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  double tpr = 0;
  double fpr = 0;
  double precision = 0;
};

/// One point per distinct score value, thresholds descending.
std::vector<CurvePoint> threshold_sweep(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Equal-width bins over the shared [min, max] range of both score sets.
struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> id_counts;
  std::vector<std::size_t> ood_counts;
};
Histogram score_histogram(std::span<const double> id_scores, std::span<const double> ood_scores, int bins);

struct EvalReport {
  std::string scorer;
  double auroc = 0;
  double aupr = 0;
  double fpr_at_95 = 0;
  double tpr_target = 0.95;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  Histogram histogram;
  std::vector<CurvePoint> curve;
};

EvalReport evaluate(const std::string& scorer, std::span<const double> id_scores, std::span<const double> ood_scores,
                    int bins = 50, double tpr_target = 0.95);

/// Requires every record in both sets to come from the same scorer.
EvalReport make_report(const std::vector<ScoreRecord>& id_records, const std::vector<ScoreRecord>& ood_records,
                       int bins = 50, double tpr_target = 0.95);

}  // namespace ocs
