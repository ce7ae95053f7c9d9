#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mirrorbench/calibration.hpp"
#include "mirrorbench/rng.hpp"

#include "oracles.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace mirrorbench;

namespace {

// histogram with the given per-key counts (keys are distinct numerics in
// order) plus u unparseable answers; majority = maj
AnswerHistogram make_hist(const std::vector<int>& counts, int u = 0, std::size_t maj_index = 0) {
  std::vector<AnswerKey> answers;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (int c = 0; c < counts[i]; ++c) {
      answers.push_back(AnswerKey::numeric(std::to_string(i + 1)));
    }
  }
  for (int i = 0; i < u; ++i) answers.push_back(AnswerKey::unparseable());
  auto h = AnswerHistogram::build(answers, AnswerKey::numeric(std::to_string(maj_index + 1)));
  REQUIRE(h.has_value());
  return *h;
}

// all ordered lists of positive ints summing to m
void compositions(int m, std::vector<int>& cur, const std::function<void()>& emit) {
  if (m == 0) {
    emit();
    return;
  }
  for (int first = 1; first <= m; ++first) {
    cur.push_back(first);
    compositions(m - first, cur, emit);
    cur.pop_back();
  }
}

bool close(double a, long double b, double tol) {
  return std::fabs(a - static_cast<double>(b)) <= tol;
}

}  // namespace

TEST_CASE("worked fixture {A:6,B:3,C:1}") {
  AnswerHistogram h = make_hist({6, 3, 1});
  CHECK(close(agree(h), 0.6L, 1e-9));
  CHECK(close(entropy_conf(h), 0.18265457785349L, 1e-9));
  CHECK(close(fsd(h), 0.3L, 1e-9));
  CHECK(close(ans_num(h), 0.7L, 1e-9));
  CHECK(close(pairwise(h), 4.0L / 7.0L, 1e-9));
}

TEST_CASE("metric spec examples") {
  AnswerHistogram unanimous = make_hist({10});
  CHECK(agree(unanimous) == 1.0);
  CHECK(entropy_conf(unanimous) == 1.0);
  CHECK(fsd(unanimous) == 1.0);
  CHECK(close(ans_num(unanimous), 0.9L, 1e-12));
  CHECK(pairwise(unanimous) == 1.0);

  AnswerHistogram split = make_hist({5, 5});
  CHECK(close(agree(split), 0.5L, 1e-12));
  CHECK(close(entropy_conf(split), 0.0L, 1e-12));
  CHECK(close(fsd(split), 0.0L, 1e-12));
  CHECK(close(pairwise(split), 0.5L, 1e-12));

  AnswerHistogram tie2 = make_hist({1, 1});
  CHECK(close(agree(tie2), 0.5L, 1e-12));

  // n answers all distinct
  AnswerHistogram distinct = make_hist({1, 1, 1, 1});
  CHECK(close(ans_num(distinct), 0.0L, 1e-12));
}

TEST_CASE("unparseables inflate n without forming keys") {
  AnswerHistogram h = make_hist({3, 2}, 5);
  CHECK(h.total() == 10);
  CHECK(h.keys.size() == 2);
  CHECK(h.unparseable_count == 5);
  CHECK(close(agree(h), 0.3L, 1e-12));
  CHECK(close(ans_num(h), 0.8L, 1e-12));
  CHECK(close(fsd(h), 0.1L, 1e-12));

  // normalized entropy would go negative here; the clamp floors it at 0
  AnswerHistogram clamped = make_hist({3, 3}, 4);
  CHECK(entropy_conf(clamped) == 0.0);

  // single key plus unparseables: entropy convention still applies
  AnswerHistogram lone = make_hist({5}, 5);
  CHECK(entropy_conf(lone) == 1.0);
  CHECK(close(agree(lone), 0.5L, 1e-12));
}

TEST_CASE("histogram build") {
  std::vector<AnswerKey> none = {AnswerKey::unparseable(), AnswerKey::unparseable()};
  CHECK_FALSE(AnswerHistogram::build(none).has_value());
  CHECK_FALSE(AnswerHistogram::build({}).has_value());

  // without an explicit winner the maximal count wins
  std::vector<AnswerKey> xs = {AnswerKey::numeric("1"), AnswerKey::numeric("2"),
                               AnswerKey::numeric("2")};
  auto h = AnswerHistogram::build(xs);
  REQUIRE(h.has_value());
  CHECK(answers_equal(h->keys[h->majority_index].key, AnswerKey::numeric("2")));

  // an explicit winner must actually occur in the answers
  CHECK_THROWS(AnswerHistogram::build(xs, AnswerKey::numeric("9")));

  // ...and is respected when it does (tie case: caller's vote decides)
  std::vector<AnswerKey> tie = {AnswerKey::numeric("1"), AnswerKey::numeric("2")};
  auto ht = AnswerHistogram::build(tie, AnswerKey::numeric("2"));
  REQUIRE(ht.has_value());
  CHECK(answers_equal(ht->keys[ht->majority_index].key, AnswerKey::numeric("2")));
}

TEST_CASE("empty histogram is an error for every metric") {
  AnswerHistogram empty;
  CHECK_THROWS_AS(agree(empty), std::invalid_argument);
  CHECK_THROWS_AS(entropy_conf(empty), std::invalid_argument);
  CHECK_THROWS_AS(fsd(empty), std::invalid_argument);
  CHECK_THROWS_AS(ans_num(empty), std::invalid_argument);
  CHECK_THROWS_AS(pairwise(empty), std::invalid_argument);
}

TEST_CASE("metric_by_name covers exactly the manifest names") {
  AnswerHistogram h = make_hist({6, 3, 1});
  CHECK(metric_by_name("agree", h) == agree(h));
  CHECK(metric_by_name("entropy", h) == entropy_conf(h));
  CHECK(metric_by_name("fsd", h) == fsd(h));
  CHECK(metric_by_name("ans_num", h) == ans_num(h));
  CHECK(metric_by_name("pairwise", h) == pairwise(h));
  CHECK_THROWS(metric_by_name("accuracy", h));
  CHECK(is_known_metric("pairwise"));
  CHECK_FALSE(is_known_metric("brier"));
}

// Exhaustive oracle equivalence over every composition with n <= 8, every
// unparseable share, and every maximal key as the chosen majority.
TEST_CASE("all five metrics match brute-force oracles exhaustively") {
  int histograms = 0;
  for (int n = 1; n <= 8; ++n) {
    for (int u = 0; u < n; ++u) {
      std::vector<int> cur;
      compositions(n - u, cur, [&] {
        int best = *std::max_element(cur.begin(), cur.end());
        for (std::size_t maj = 0; maj < cur.size(); ++maj) {
          if (cur[maj] != best) continue;
          AnswerHistogram h = make_hist(cur, u, maj);
          CHECK(close(agree(h), oracle::agree(cur, u, maj), 1e-9));
          CHECK(close(entropy_conf(h), oracle::entropy_conf(cur, u, maj), 1e-9));
          CHECK(close(fsd(h), oracle::fsd(cur, u, maj), 1e-9));
          CHECK(close(ans_num(h), oracle::ans_num(cur, u, maj), 1e-9));
          CHECK(close(pairwise(h), oracle::pairwise(cur, u, maj), 1e-9));
          ++histograms;
        }
      });
    }
  }
  CHECK(histograms > 250);
}

TEST_CASE("range and unanimity-maximality up to n = 12") {
  for (int n = 1; n <= 12; ++n) {
    AnswerHistogram unanimous = make_hist({n});
    double top[5] = {agree(unanimous), entropy_conf(unanimous), fsd(unanimous),
                     ans_num(unanimous), pairwise(unanimous)};
    for (int u = 0; u < n; ++u) {
      std::vector<int> cur;
      compositions(n - u, cur, [&] {
        int best = *std::max_element(cur.begin(), cur.end());
        std::size_t maj = static_cast<std::size_t>(
            std::max_element(cur.begin(), cur.end()) - cur.begin());
        (void)best;
        AnswerHistogram h = make_hist(cur, u, maj);
        double vals[5] = {agree(h), entropy_conf(h), fsd(h), ans_num(h), pairwise(h)};
        for (int i = 0; i < 5; ++i) {
          CHECK(vals[i] >= 0.0);
          CHECK(vals[i] <= 1.0);
          if (u == 0) CHECK(vals[i] <= top[i] + 1e-12);
        }
      });
    }
  }
}

TEST_CASE("metrics are invariant under key relabeling") {
  // same counts, different key identities/positions, majority tracked
  AnswerHistogram a = make_hist({6, 3, 1}, 0, 0);
  AnswerHistogram b = make_hist({1, 3, 6}, 0, 2);
  CHECK(agree(a) == agree(b));
  CHECK(entropy_conf(a) == entropy_conf(b));
  CHECK(fsd(a) == fsd(b));
  CHECK(ans_num(a) == ans_num(b));
  CHECK(pairwise(a) == pairwise(b));
}

TEST_CASE("ece spec examples") {
  std::vector<CalibrationPoint> fixture = {
      {"q1", 0.95, true}, {"q2", 0.95, false}, {"q3", 0.65, true}, {"q4", 0.55, true}};
  CHECK(close(ece(fixture), 0.425L, 1e-12));

  std::vector<CalibrationPoint> perfect(20, CalibrationPoint{"q", 1.0, true});
  CHECK(ece(perfect) == 0.0);

  std::vector<CalibrationPoint> one = {{"q", 0.3, false}};
  CHECK(close(ece(one), 0.3L, 1e-12));
}

TEST_CASE("ece input validation") {
  CHECK_THROWS_AS(ece({}), std::invalid_argument);
  std::vector<CalibrationPoint> bad = {{"q", 1.5, true}};
  CHECK_THROWS_AS(ece(bad), std::invalid_argument);
  std::vector<CalibrationPoint> neg = {{"q", -0.01, true}};
  CHECK_THROWS_AS(ece(neg), std::invalid_argument);
}

TEST_CASE("bin assignment: half-open edges, top bin closed") {
  // 0.7 sits in [0.7, 0.8), away from [0.6, 0.7)
  std::vector<CalibrationPoint> pts = {{"a", 0.7, true}};
  auto bins = reliability_bins(pts, 10, 0.0);
  CHECK(bins[7].size == 1);
  CHECK(bins[6].size == 0);

  std::vector<CalibrationPoint> top = {{"a", 1.0, true}, {"b", 0.0, false}};
  bins = reliability_bins(top, 10, 0.0);
  CHECK(bins[9].size == 1);
  CHECK(bins[0].size == 1);
}

TEST_CASE("ece matches the naive interval-membership oracle on 1000 seeded sets") {
  RngStream rng(20240818);
  for (int iter = 0; iter < 1000; ++iter) {
    std::size_t n = 1 + rng.uniform_index(300);
    std::vector<CalibrationPoint> pts;
    std::vector<oracle::Point> opts;
    for (std::size_t i = 0; i < n; ++i) {
      double c;
      switch (rng.uniform_index(12)) {
        case 0: c = 1.0; break;
        case 1: c = 0.0; break;
        case 2: c = 0.5; break;   // exact bin edge
        case 3: c = 0.7; break;   // exact bin edge
        default: c = rng.next_unit(); break;
      }
      bool correct = rng.uniform_index(2) == 1;
      pts.push_back({"q", c, correct});
      opts.push_back({c, correct});
    }
    double got = ece(pts);
    long double want = oracle::ece(opts, 10);
    REQUIRE_MESSAGE(close(got, want, 1e-12), "iter ", iter, " got ", got);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("perfectly calibrated synthetic data has near-zero ece") {
  RngStream rng(7);
  std::vector<CalibrationPoint> pts;
  pts.reserve(50000);
  for (int i = 0; i < 50000; ++i) {
    double c = rng.next_unit();
    pts.push_back({"q", c, rng.next_unit() < c});
  }
  CHECK(ece(pts) < 0.02);
}

TEST_CASE("reliability bins: partition, omission threshold, size hints") {
  RngStream rng(13);
  std::vector<CalibrationPoint> pts;
  for (int i = 0; i < 768; ++i) pts.push_back({"q", rng.next_unit(), true});
  auto bins = reliability_bins(pts, 10, 0.01);

  int total = 0;
  for (const auto& b : bins) total += b.size;
  CHECK(total == 768);  // every point lands in exactly one bin
  CHECK(bins.size() == 10);

  for (const auto& b : bins) {
    CHECK(b.size_hint == doctest::Approx(std::sqrt(static_cast<double>(b.size))));
    // omission is strictly-less-than 1% of N (7.68 here)
    CHECK(b.omitted == (b.size < 8));
    if (b.size > 0) {
      CHECK(b.mean_conf >= b.lo);
      // mean_conf < hi except the closed top bin could touch hi
      CHECK(b.mean_conf <= b.hi);
      CHECK(b.accuracy == 1.0);
    }
  }

  // threshold arithmetic from the spec: 7 of 768 omitted, 8 of 768 retained
  std::vector<CalibrationPoint> crafted;
  for (int i = 0; i < 7; ++i) crafted.push_back({"q", 0.05, false});
  for (int i = 0; i < 761; ++i) crafted.push_back({"q", 0.95, true});
  bins = reliability_bins(crafted, 10, 0.01);
  CHECK(bins[0].size == 7);
  CHECK(bins[0].omitted);
  CHECK_FALSE(bins[9].omitted);

  crafted.clear();
  for (int i = 0; i < 8; ++i) crafted.push_back({"q", 0.05, false});
  for (int i = 0; i < 760; ++i) crafted.push_back({"q", 0.95, true});
  bins = reliability_bins(crafted, 10, 0.01);
  CHECK(bins[0].size == 8);
  CHECK_FALSE(bins[0].omitted);

  // sqrt hint example: 64 points in one bin -> 8
  crafted.assign(64, CalibrationPoint{"q", 0.45, true});
  bins = reliability_bins(crafted, 10, 0.01);
  CHECK(bins[4].size == 64);
  CHECK(bins[4].size_hint == doctest::Approx(8.0));
}

TEST_CASE("omitted bins still participate in ece") {
  // one lonely low bin below 1%: ece must include it all the same
  std::vector<CalibrationPoint> pts;
  for (int i = 0; i < 199; ++i) pts.push_back({"q", 0.95, true});
  pts.push_back({"q", 0.05, true});
  auto bins = reliability_bins(pts, 10, 0.01);
  CHECK(bins[0].omitted);  // 1 < 2.0
  double expect = (199.0 / 200.0) * std::fabs(1.0 - 0.95) + (1.0 / 200.0) * std::fabs(1.0 - 0.05);
  CHECK(close(ece(pts), expect, 1e-12));
}
