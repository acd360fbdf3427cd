#include "gzhybrid/dirichlet.hpp"

#include <cmath>
#include <stdexcept>

#include "gzhybrid/rng.hpp"
#include "gzhybrid/special.hpp"

namespace gzhybrid {

namespace {

void check_inputs(std::span<const std::int64_t> k, std::span<const double> alpha) {
  if (k.size() != alpha.size())
    throw std::invalid_argument("dirichlet: k and alpha length mismatch");
  if (k.size() < 2)
    throw std::invalid_argument("dirichlet: a question needs at least two answers");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("dirichlet: alpha entries must be positive and finite");
  for (std::int64_t c : k)
    if (c < 0) throw std::invalid_argument("dirichlet: counts must be nonnegative");
}

}  // namespace

double dm_log_likelihood(std::span<const std::int64_t> k,
                         std::span<const double> alpha,
                         bool include_coefficient) {
  check_inputs(k, alpha);
  std::int64_t n = 0;
  for (auto c : k) n += c;
  if (n == 0) return 0.0;  // p(no votes | alpha) = 1 for all alpha

  double alpha_sum = 0.0;
  for (double a : alpha) alpha_sum += a;

  double ll = log_gamma(alpha_sum) - log_gamma(double(n) + alpha_sum);
  for (std::size_t i = 0; i < k.size(); ++i)
    ll += log_gamma(double(k[i]) + alpha[i]) - log_gamma(alpha[i]);
  if (include_coefficient) {
    ll += log_gamma(double(n) + 1.0);
    for (auto c : k) ll -= log_gamma(double(c) + 1.0);
  }
  return ll;
}

std::vector<double> dm_grad_alpha(std::span<const std::int64_t> k,
                                  std::span<const double> alpha) {
  check_inputs(k, alpha);
  std::int64_t n = 0;
  for (auto c : k) n += c;
  if (n == 0) return std::vector<double>(k.size(), 0.0);

  double alpha_sum = 0.0;
  for (double a : alpha) alpha_sum += a;

  const double common = digamma(alpha_sum) - digamma(double(n) + alpha_sum);
  std::vector<double> grad(k.size());
  for (std::size_t i = 0; i < k.size(); ++i)
    grad[i] = common + digamma(double(k[i]) + alpha[i]) - digamma(alpha[i]);
  return grad;
}

MultiQuestionLoss multi_question_loss(const VoteVector& votes,
                                      std::span<const double> alpha,
                                      const std::vector<QuestionSlice>& slices,
                                      bool include_coefficient) {
  if (votes.counts.size() != alpha.size())
    throw std::invalid_argument("multi_question_loss: K and alpha length mismatch");
  MultiQuestionLoss out;
  out.per_question.reserve(slices.size());
  for (const auto& slice : slices) {
    if (slice.end > alpha.size() || slice.begin > slice.end)
      throw std::invalid_argument("multi_question_loss: slice out of range");
    QuestionLikelihood q;
    q.question_id = slice.question_id;
    const std::size_t len = slice.end - slice.begin;
    std::span<const std::int64_t> k(votes.counts.data() + slice.begin, len);
    std::span<const double> a(alpha.data() + slice.begin, len);
    std::int64_t n = 0;
    for (auto c : k) n += c;
    if (n == 0) {
      // Unanswered question: value 0, gradient exactly zero.
      q.log_likelihood = 0.0;
      q.grad.assign(len, 0.0);
    } else {
      q.log_likelihood = dm_log_likelihood(k, a, include_coefficient);
      q.grad = dm_grad_alpha(k, a);
    }
    out.total += q.log_likelihood;
    out.per_question.push_back(std::move(q));
  }
  return out;
}

DirichletPrediction link(std::span<const double> raw) {
  DirichletPrediction out;
  out.alpha.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]))
      throw std::invalid_argument("link: non-finite input");
    const double s = 1.0 / (1.0 + std::exp(-raw[i]));
    out.alpha[i] = 1.0 + 99.0 * s;
    // The closed interval ends are unreachable in exact arithmetic; clamp the
    // rounded-off extremes back inside so downstream log-gamma stays finite.
    if (out.alpha[i] <= 1.0) out.alpha[i] = std::nextafter(1.0, 2.0);
    if (out.alpha[i] >= 100.0) out.alpha[i] = std::nextafter(100.0, 0.0);
  }
  return out;
}

std::vector<double> link_grad(std::span<const double> raw) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]))
      throw std::invalid_argument("link_grad: non-finite input");
    const double s = 1.0 / (1.0 + std::exp(-raw[i]));
    out[i] = 99.0 * s * (1.0 - s);
  }
  return out;
}

double dm_mc_oracle(std::span<const std::int64_t> k, std::span<const double> alpha,
                    std::size_t samples, std::uint64_t seed) {
  check_inputs(k, alpha);
  if (samples < 10000)
    throw std::invalid_argument("dm_mc_oracle: needs at least 1e4 samples");
  std::int64_t n = 0;
  for (auto c : k) n += c;

  double log_coef = log_gamma(double(n) + 1.0);
  for (auto c : k) log_coef -= log_gamma(double(c) + 1.0);

  Rng rng = Rng::stream(seed, "dm-mc-oracle");
  std::vector<double> rho(alpha.size());
  double mean = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    rng.dirichlet(alpha, rho);
    double logp = log_coef;
    bool zero = false;
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (k[i] == 0) continue;
      if (rho[i] <= 0.0) {
        zero = true;
        break;
      }
      logp += double(k[i]) * std::log(rho[i]);
    }
    const double p = zero ? 0.0 : std::exp(logp);
    mean += (p - mean) / double(s + 1);
  }
  return mean;
}

}  // namespace gzhybrid
