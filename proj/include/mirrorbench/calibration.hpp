#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mirrorbench/core.hpp"
#include "mirrorbench/voting.hpp"

namespace mirrorbench {

/// Count histogram over one question's answers. Unparseable answers are part
/// of total() but never form a key; every confidence metric divides by
/// total(), so failed extractions drag confidence down instead of vanishing.
struct AnswerHistogram {
  std::vector<RankedKey> keys;       // unique parseable keys, first-appearance order
  int unparseable_count = 0;
  std::size_t majority_index = 0;    // into keys; a maximal count

  int total() const;
  bool empty() const { return keys.empty(); }

  /// Builds from raw answers. When `winner` is given (the engine's final
  /// vote) it selects the majority key and must be present; otherwise the
  /// first maximal-count key is used. Returns nullopt when nothing parsed.
  static std::optional<AnswerHistogram> build(std::span<const AnswerKey> answers,
                                              const std::optional<AnswerKey>& winner = {});
};

// The five sample-based confidence scores. All take a non-empty histogram
// (throw std::invalid_argument otherwise) and return a value in [0, 1].

/// Fraction of all n answers that match the majority key.
double agree(const AnswerHistogram& h);

/// 1 - normalized Shannon entropy of the answer distribution (natural log,
/// normalized by log of the unique-key count). Single unique key = 1.0 by
/// convention. Clamped to [0, 1].
double entropy_conf(const AnswerHistogram& h);

/// Agreement gap between the top two keys; with one unique key the runner-up
/// agreement is 0.
double fsd(const AnswerHistogram& h);

/// 1 - (unique key count)/n.
double ans_num(const AnswerHistogram& h);

/// Product over non-majority keys j of n_maj/(n_maj + n_j); empty product 1.
double pairwise(const AnswerHistogram& h);

/// Dispatch by manifest metric name: agree, entropy, fsd, ans_num, pairwise.
double metric_by_name(std::string_view name, const AnswerHistogram& h);

bool is_known_metric(std::string_view name);

struct ReliabilityBin {
  int bin = 0;           // 1-based index m
  double lo = 0.0;       // interval [lo, hi); the top bin is closed
  double hi = 0.0;
  double mean_conf = 0.0;
  double accuracy = 0.0;
  int size = 0;
  bool omitted = false;  // size < min_frac * N: skip when plotting
  double size_hint = 0.0;  // sqrt(size), the plot point size
};

/// Expected calibration error over M equal-width bins. A confidence c lands
/// in bin floor(c*M), clamped so c = 1.0 joins the top bin. Empty input or a
/// confidence outside [0,1] throws.
double ece(std::span<const CalibrationPoint> points, int bins = 10);

/// Per-bin stats for reliability curves; always returns all `bins` bins.
/// Omitted bins still participate in ECE.
std::vector<ReliabilityBin> reliability_bins(std::span<const CalibrationPoint> points,
                                             int bins = 10, double min_frac = 0.01);

}  // namespace mirrorbench
