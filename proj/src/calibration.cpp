#include "mirrorbench/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mirrorbench {

namespace {

void require_nonempty(const AnswerHistogram& h) {
  if (h.empty()) throw std::invalid_argument("empty histogram: no parseable answers");
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

int AnswerHistogram::total() const {
  int n = unparseable_count;
  for (const RankedKey& k : keys) n += k.count;
  return n;
}

std::optional<AnswerHistogram> AnswerHistogram::build(std::span<const AnswerKey> answers,
                                                      const std::optional<AnswerKey>& winner) {
  AnswerHistogram h;
  h.keys = tally(answers);
  for (const AnswerKey& a : answers) {
    if (!a.parseable()) ++h.unparseable_count;
  }
  if (h.keys.empty()) return std::nullopt;

  if (winner && winner->parseable()) {
    bool found = false;
    for (std::size_t i = 0; i < h.keys.size(); ++i) {
      if (answers_equal(h.keys[i].key, *winner)) {
        h.majority_index = i;
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("winner key absent from answers");
  } else {
    for (std::size_t i = 1; i < h.keys.size(); ++i) {
      if (h.keys[i].count > h.keys[h.majority_index].count) h.majority_index = i;
    }
  }
  return h;
}

double agree(const AnswerHistogram& h) {
  require_nonempty(h);
  return static_cast<double>(h.keys[h.majority_index].count) / h.total();
}

double entropy_conf(const AnswerHistogram& h) {
  require_nonempty(h);
  if (h.keys.size() == 1) return 1.0;
  const double n = h.total();
  double entropy = 0.0;
  for (const RankedKey& k : h.keys) {
    double p = k.count / n;
    entropy -= p * std::log(p);
  }
  // with unparseables in n the p_i sum below 1 and the normalized entropy can
  // leave [0,1]; confidences are clamped rather than rejected
  return clamp01(1.0 - entropy / std::log(static_cast<double>(h.keys.size())));
}

double fsd(const AnswerHistogram& h) {
  require_nonempty(h);
  int second = 0;
  for (std::size_t i = 0; i < h.keys.size(); ++i) {
    if (i != h.majority_index) second = std::max(second, h.keys[i].count);
  }
  return static_cast<double>(h.keys[h.majority_index].count - second) / h.total();
}

double ans_num(const AnswerHistogram& h) {
  require_nonempty(h);
  return 1.0 - static_cast<double>(h.keys.size()) / h.total();
}

double pairwise(const AnswerHistogram& h) {
  require_nonempty(h);
  const int maj = h.keys[h.majority_index].count;
  double product = 1.0;
  for (std::size_t i = 0; i < h.keys.size(); ++i) {
    if (i == h.majority_index) continue;
    product *= static_cast<double>(maj) / (maj + h.keys[i].count);
  }
  return product;
}

double metric_by_name(std::string_view name, const AnswerHistogram& h) {
  if (name == "agree") return agree(h);
  if (name == "entropy") return entropy_conf(h);
  if (name == "fsd") return fsd(h);
  if (name == "ans_num") return ans_num(h);
  if (name == "pairwise") return pairwise(h);
  throw std::invalid_argument("unknown metric: '" + std::string(name) + "'");
}

bool is_known_metric(std::string_view name) {
  return name == "agree" || name == "entropy" || name == "fsd" || name == "ans_num" ||
         name == "pairwise";
}

namespace {

std::size_t bin_of(double confidence, int bins) {
  if (confidence < 0.0 || confidence > 1.0) {
    throw std::invalid_argument("confidence outside [0,1]: " + std::to_string(confidence));
  }
  auto b = static_cast<std::size_t>(confidence * bins);
  return std::min(b, static_cast<std::size_t>(bins - 1));  // 1.0 joins the top bin
}

}  // namespace

double ece(std::span<const CalibrationPoint> points, int bins) {
  if (points.empty()) throw std::invalid_argument("ece needs at least one point");
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");

  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<int> correct(static_cast<std::size_t>(bins), 0);
  std::vector<int> size(static_cast<std::size_t>(bins), 0);
  for (const CalibrationPoint& p : points) {
    std::size_t b = bin_of(p.confidence, bins);
    conf_sum[b] += p.confidence;
    correct[b] += p.correct ? 1 : 0;
    ++size[b];
  }

  const double n = static_cast<double>(points.size());
  double out = 0.0;
  for (std::size_t b = 0; b < static_cast<std::size_t>(bins); ++b) {
    if (size[b] == 0) continue;
    double acc = static_cast<double>(correct[b]) / size[b];
    double conf = conf_sum[b] / size[b];
    out += (size[b] / n) * std::fabs(acc - conf);
  }
  return out;
}

std::vector<ReliabilityBin> reliability_bins(std::span<const CalibrationPoint> points, int bins,
                                             double min_frac) {
  if (points.empty()) throw std::invalid_argument("reliability_bins needs at least one point");
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");

  std::vector<ReliabilityBin> out(static_cast<std::size_t>(bins));
  for (int m = 0; m < bins; ++m) {
    auto& b = out[static_cast<std::size_t>(m)];
    b.bin = m + 1;
    b.lo = static_cast<double>(m) / bins;
    b.hi = static_cast<double>(m + 1) / bins;
  }

  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<int> correct(static_cast<std::size_t>(bins), 0);
  for (const CalibrationPoint& p : points) {
    std::size_t b = bin_of(p.confidence, bins);
    conf_sum[b] += p.confidence;
    correct[b] += p.correct ? 1 : 0;
    ++out[b].size;
  }

  const double threshold = min_frac * static_cast<double>(points.size());
  for (auto& b : out) {
    if (b.size > 0) {
      b.mean_conf = conf_sum[static_cast<std::size_t>(b.bin - 1)] / b.size;
      b.accuracy = static_cast<double>(correct[static_cast<std::size_t>(b.bin - 1)]) / b.size;
    }
    b.omitted = static_cast<double>(b.size) < threshold;
    b.size_hint = std::sqrt(static_cast<double>(b.size));
  }
  return out;
}

}  // namespace mirrorbench
