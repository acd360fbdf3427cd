#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gzhybrid/dirichlet.hpp"
#include "gzhybrid/rng.hpp"
#include "gzhybrid/schema.hpp"

using namespace gzhybrid;

namespace {

using I64 = std::vector<std::int64_t>;
using F64 = std::vector<double>;

// All count vectors of length `bins` summing to `total`.
void compositions(std::int64_t total, std::size_t bins, I64& prefix,
                  std::vector<I64>& out) {
  if (bins == 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (std::int64_t c = 0; c <= total; ++c) {
    prefix.push_back(c);
    compositions(total - c, bins - 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

TEST_CASE("uniform Dirichlet symmetry: p(k=(1,0) | alpha=(1,1)) = 1/2") {
  const double ll = dm_log_likelihood(I64{1, 0}, F64{1.0, 1.0}, true);
  CHECK(ll == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("no votes means probability one and zero gradient, exactly") {
  CHECK(dm_log_likelihood(I64{0, 0}, F64{3.0, 7.0}, true) == 0.0);
  CHECK(dm_log_likelihood(I64{0, 0}, F64{55.1, 0.3}, false) == 0.0);
  const auto grad = dm_grad_alpha(I64{0, 0}, F64{3.0, 7.0});
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] == 0.0);
}

// Frozen from the Monte-Carlo oracle (1e6 samples gave 0.2999 +/- 0.002)
// before the closed form was trusted; the exact value is 0.3.
TEST_CASE("p(k=(2,0) | alpha=(2,2)) = 0.3") {
  const double ll = dm_log_likelihood(I64{2, 0}, F64{2.0, 2.0}, true);
  CHECK(ll == doctest::Approx(std::log(0.3)).epsilon(1e-12));
  const double mc = dm_mc_oracle(I64{2, 0}, F64{2.0, 2.0}, 1000000, 11);
  CHECK(std::abs(mc - 0.3) < 0.002);
}

TEST_CASE("Monte-Carlo oracle: known value, determinism, sample floor") {
  const double mc = dm_mc_oracle(I64{1, 0}, F64{1.0, 1.0}, 1000000, 5);
  CHECK(std::abs(mc - 0.5) < 0.002);
  CHECK(dm_mc_oracle(I64{1, 0}, F64{1.0, 1.0}, 20000, 9) ==
        dm_mc_oracle(I64{1, 0}, F64{1.0, 1.0}, 20000, 9));
  CHECK_THROWS_AS(dm_mc_oracle(I64{1, 0}, F64{1.0, 1.0}, 100, 1),
                  std::invalid_argument);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(dm_log_likelihood(I64{1, 0, 0}, F64{1.0, 1.0}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(dm_log_likelihood(I64{1, 0}, F64{1.0, -1.0}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(dm_log_likelihood(I64{1}, F64{1.0}, false), std::invalid_argument);
  CHECK_THROWS_AS(dm_grad_alpha(I64{1, -1}, F64{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("gradient symmetry: k=(1,1), alpha=(a,a) gives equal components") {
  for (double a : {0.5, 1.0, 3.0, 42.0}) {
    const auto g = dm_grad_alpha(I64{1, 1}, F64{a, a});
    CHECK(g[0] == doctest::Approx(g[1]).epsilon(1e-14));
  }
}

TEST_CASE("gradient matches central finite differences on 100 random cases") {
  Rng rng(2024);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t bins = 2 + rng.below(4);
    I64 k(bins);
    F64 alpha(bins);
    for (std::size_t i = 0; i < bins; ++i) {
      k[i] = std::int64_t(rng.below(7));
      alpha[i] = std::exp(rng.uniform(std::log(1.01), std::log(99.0)));
    }
    std::int64_t n = 0;
    for (auto c : k) n += c;
    if (n == 0) k[0] = 1;

    const auto grad = dm_grad_alpha(k, alpha);
    const double h = 1e-5;
    for (std::size_t i = 0; i < bins; ++i) {
      F64 up = alpha, dn = alpha;
      up[i] += h;
      dn[i] -= h;
      const double fd =
          (dm_log_likelihood(k, up, false) - dm_log_likelihood(k, dn, false)) /
          (2.0 * h);
      CHECK(std::abs(grad[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("normalization: sum over all compositions equals one") {
  Rng rng(7);
  for (std::size_t bins : {2u, 3u}) {
    F64 alpha(bins);
    for (auto& a : alpha) a = std::exp(rng.uniform(std::log(1.1), std::log(50.0)));
    for (std::int64_t total = 0; total <= 4; ++total) {
      std::vector<I64> cases;
      I64 prefix;
      compositions(total, bins, prefix, cases);
      double sum = 0.0;
      for (const auto& k : cases) sum += std::exp(dm_log_likelihood(k, alpha, true));
      CHECK(std::abs(sum - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("oracle agreement on random small cases") {
  Rng rng(31337);
  for (int iter = 0; iter < 5; ++iter) {
    const std::size_t bins = 2 + rng.below(3);
    I64 k(bins, 0);
    F64 alpha(bins);
    for (auto& a : alpha) a = std::exp(rng.uniform(std::log(1.05), std::log(30.0)));
    const std::int64_t n = 1 + std::int64_t(rng.below(5));
    for (std::int64_t t = 0; t < n; ++t) ++k[rng.below(bins)];
    const double closed = std::exp(dm_log_likelihood(k, alpha, true));
    const double mc = dm_mc_oracle(k, alpha, 1000000, 100 + std::uint64_t(iter));
    CHECK(std::abs(closed - mc) < 0.01);
  }
}

TEST_CASE("multi-question loss sums per-question values and masks N_q = 0") {
  const AnswerSchema s = AnswerSchema::from_document(R"({"campaigns":[
    {"name":"x","questions":[
      {"id":"q1","answers":["a1","a2"]},
      {"id":"q2","answers":["b1","b2","b3"]}
    ]}]})");
  const auto slices = s.slices();

  VoteVector votes{{2, 1, 0, 0, 0}};  // q2 unanswered
  F64 alpha = {3.0, 4.0, 9.0, 2.0, 5.0};
  const auto loss = multi_question_loss(votes, alpha, slices, false);
  const double q1 = dm_log_likelihood(I64{2, 1}, F64{3.0, 4.0}, false);
  CHECK(loss.total == doctest::Approx(q1).epsilon(1e-14));
  CHECK(loss.per_question[1].log_likelihood == 0.0);
  for (double g : loss.per_question[1].grad) CHECK(g == 0.0);

  // Perturbing alpha on the unanswered question changes nothing, exactly.
  F64 alpha2 = alpha;
  alpha2[2] += 17.0;
  alpha2[4] -= 1.5;
  const auto loss2 = multi_question_loss(votes, alpha2, slices, false);
  CHECK(loss2.total == loss.total);
  for (std::size_t i = 0; i < loss.per_question[0].grad.size(); ++i)
    CHECK(loss2.per_question[0].grad[i] == loss.per_question[0].grad[i]);

  SUBCASE("all questions unanswered gives exactly zero") {
    VoteVector zero{{0, 0, 0, 0, 0}};
    CHECK(multi_question_loss(zero, alpha, slices, false).total == 0.0);
  }

  SUBCASE("two answered questions sum to the independent parts") {
    VoteVector both{{2, 1, 4, 0, 3}};
    const auto l = multi_question_loss(both, alpha, slices, false);
    const double expect = dm_log_likelihood(I64{2, 1}, F64{3.0, 4.0}, false) +
                          dm_log_likelihood(I64{4, 0, 3}, F64{9.0, 2.0, 5.0}, false);
    CHECK(std::abs(l.total - expect) < 1e-12);
  }

  SUBCASE("length mismatch is rejected") {
    VoteVector bad{{1, 0, 0}};
    CHECK_THROWS_AS(multi_question_loss(bad, alpha, slices, false),
                    std::invalid_argument);
  }
}

TEST_CASE("link maps reals into (1, 100) with sigmoid shape") {
  const auto mid = link(F64{0.0});
  CHECK(mid.alpha[0] == doctest::Approx(50.5).epsilon(1e-12));

  Rng rng(55);
  double prev = -1.0;
  for (double x : {-40.0, -5.0, -1.0, 0.0, 1.0, 5.0, 40.0}) {
    const auto a = link(F64{x});
    CHECK(a.alpha[0] > 1.0);
    CHECK(a.alpha[0] < 100.0);
    CHECK(a.alpha[0] > prev);  // monotone
    prev = a.alpha[0];
  }
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(-60.0, 60.0);
    const auto a = link(F64{x});
    CHECK(a.alpha[0] > 1.0);
    CHECK(a.alpha[0] < 100.0);
  }
  CHECK_THROWS_AS(link(F64{std::nan("")}), std::invalid_argument);
}

TEST_CASE("link derivative matches finite differences") {
  Rng rng(66);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-8.0, 8.0);
    const double h = 1e-6;
    const double fd = (link(F64{x + h}).alpha[0] - link(F64{x - h}).alpha[0]) / (2 * h);
    const double an = link_grad(F64{x})[0];
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
  }
}
