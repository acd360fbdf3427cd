#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "gzhybrid/rng.hpp"
#include "gzhybrid/special.hpp"

using namespace gzhybrid;

TEST_CASE("log_gamma and digamma match the high-precision reference fixture") {
  std::ifstream in(std::string(GZHYBRID_TEST_FIXTURES) + "/special_reference.txt");
  REQUIRE(in.good());
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string fn;
    double x = 0.0, ref = 0.0;
    REQUIRE((ls >> fn >> x >> ref));
    const double got = fn == "lgamma" ? log_gamma(x) : digamma(x);
    // relative with an absolute floor; some references sit near zero
    CHECK(std::abs(got - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    ++checked;
  }
  CHECK(checked == 90);
}

TEST_CASE("digamma satisfies the recurrence psi(x+1) = psi(x) + 1/x") {
  Rng rng(123);
  for (int i = 0; i < 200; ++i) {
    const double x = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
    const double lhs = digamma(x + 1.0);
    const double rhs = digamma(x) + 1.0 / x;
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("log_gamma satisfies lgamma(x+1) = lgamma(x) + log(x)") {
  Rng rng(321);
  for (int i = 0; i < 200; ++i) {
    const double x = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
    const double lhs = log_gamma(x + 1.0);
    const double rhs = log_gamma(x) + std::log(x);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-1.0), std::domain_error);
}

TEST_CASE("rng streams are deterministic and independent") {
  Rng a = Rng::stream(7, "augment", 1, 2);
  Rng b = Rng::stream(7, "augment", 1, 2);
  Rng c = Rng::stream(7, "augment", 1, 3);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  Rng a2 = Rng::stream(7, "augment", 1, 2);
  for (int i = 0; i < 16; ++i) differs |= (a2.next_u64() != c.next_u64());
  CHECK(differs);
}

TEST_CASE("gamma sampler moments") {
  Rng rng(99);
  for (double shape : {0.5, 1.0, 2.5, 8.0}) {
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      sum += g;
      sum2 += g * g;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - shape) < 0.05 * std::max(1.0, shape));
    CHECK(std::abs(var - shape) < 0.12 * std::max(1.0, shape));
  }
}

TEST_CASE("dirichlet sampler lands on the simplex with the right mean") {
  Rng rng(1234);
  const std::vector<double> alpha = {2.0, 3.0, 5.0};
  std::vector<double> acc(3, 0.0), rho(3);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    rng.dirichlet(alpha, rho);
    double s = 0.0;
    for (double v : rho) s += v;
    REQUIRE(std::abs(s - 1.0) < 1e-12);
    for (int j = 0; j < 3; ++j) acc[j] += rho[j];
  }
  CHECK(std::abs(acc[0] / n - 0.2) < 0.01);
  CHECK(std::abs(acc[1] / n - 0.3) < 0.01);
  CHECK(std::abs(acc[2] / n - 0.5) < 0.01);
}
