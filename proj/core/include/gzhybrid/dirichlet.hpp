#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gzhybrid/schema.hpp"

namespace gzhybrid {

// Per-answer Dirichlet concentrations over the global answer index, produced
// by the supervised head through the sigmoid link; every entry lies strictly
// inside (1, 100).
struct DirichletPrediction {
  std::vector<double> alpha;
};

// log of the Dirichlet-Multinomial probability of counts k under
// concentrations alpha:
//
//   log DM(k | alpha) = log Gamma(A0) - log Gamma(N + A0)
//                     + sum_i [log Gamma(k_i + alpha_i) - log Gamma(alpha_i)]
//                     (+ log multinomial coefficient when requested)
//
// with N = sum k_i and A0 = sum alpha_i. The coefficient term is constant in
// alpha, so the training loss omits it; oracle comparisons include it.
// Returns exactly 0 when N = 0.
double dm_log_likelihood(std::span<const std::int64_t> k,
                         std::span<const double> alpha,
                         bool include_coefficient);

// d log DM / d alpha_i = psi(A0) - psi(N + A0) + psi(k_i + alpha_i) - psi(alpha_i).
// Exactly zero when N = 0.
std::vector<double> dm_grad_alpha(std::span<const std::int64_t> k,
                                  std::span<const double> alpha);

struct QuestionLikelihood {
  std::string question_id;
  double log_likelihood = 0.0;
  std::vector<double> grad;  // over the question's answer slice
};

struct MultiQuestionLoss {
  double total = 0.0;
  std::vector<QuestionLikelihood> per_question;
};

// Sum of per-question log-likelihoods over the given slices. Questions with
// N_q = 0 contribute exactly zero to value and gradient.
MultiQuestionLoss multi_question_loss(const VoteVector& votes,
                                      std::span<const double> alpha,
                                      const std::vector<QuestionSlice>& slices,
                                      bool include_coefficient = false);

// alpha_i = 1 + 99 * sigmoid(x_i); strictly inside (1, 100), monotone in x.
DirichletPrediction link(std::span<const double> raw);

// d alpha_i / d x_i for the link above.
std::vector<double> link_grad(std::span<const double> raw);

// Monte-Carlo estimate of the Dirichlet-Multinomial probability (not log):
// samples rho ~ Dirichlet(alpha) and averages the multinomial pmf of k.
// Deterministic given the seed. Verification oracle for dm_log_likelihood.
double dm_mc_oracle(std::span<const std::int64_t> k, std::span<const double> alpha,
                    std::size_t samples, std::uint64_t seed);

}  // namespace gzhybrid
