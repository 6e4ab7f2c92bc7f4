#include "rlpart/a2c.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rlpart/error.hpp"

namespace rlpart {

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma,
                                       ReturnOrder order) {
  const int t_end = static_cast<int>(rewards.size());
  std::vector<double> returns(t_end, 0.0);
  if (t_end == 0) return returns;
  if (order == ReturnOrder::ToGo) {
    returns[t_end - 1] = rewards[t_end - 1];
    for (int t = t_end - 2; t >= 0; --t) returns[t] = rewards[t] + gamma * returns[t + 1];
  } else {
    returns[0] = rewards[0];
    for (int t = 1; t < t_end; ++t) returns[t] = rewards[t] + gamma * returns[t - 1];
  }
  return returns;
}

std::vector<double> normalize_returns(const std::vector<double>& returns) {
  const int n = static_cast<int>(returns.size());
  if (n == 0) return {};
  if (n == 1) return {0.0};
  double mean = 0;
  for (double r : returns) mean += r;
  mean /= n;
  double var = 0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= n;
  const double denom = std::sqrt(var) + 1e-8;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = (returns[i] - mean) / denom;
  return out;
}

double a2c_loss(const Episode& ep, const std::vector<double>& returns, double alpha,
                std::vector<double>* d_logp_chosen, std::vector<double>* d_value) {
  const std::size_t t_end = ep.length();
  if (returns.size() != t_end || ep.log_probs.size() != t_end || ep.values.size() != t_end)
    throw InvalidInputError("a2c_loss sequence lengths disagree");
  if (d_logp_chosen) d_logp_chosen->assign(t_end, 0.0);
  if (d_value) d_value->assign(t_end, 0.0);
  double loss = 0;
  for (std::size_t t = 0; t < t_end; ++t) {
    const double adv = returns[t] - ep.values[t];  // constant in the actor term
    loss += -ep.log_probs[t] * adv + alpha * adv * adv;
    if (d_logp_chosen) (*d_logp_chosen)[t] = -adv;
    if (d_value) (*d_value)[t] = -2.0 * alpha * adv;
  }
  return loss;
}

int sample_action(const std::vector<double>& log_probs, SampleMode mode, Rng& rng) {
  const int n = static_cast<int>(log_probs.size());
  int best = -1;
  for (int i = 0; i < n; ++i)
    if (std::isfinite(log_probs[i]) && (best == -1 || log_probs[i] > log_probs[best])) best = i;
  if (best == -1) throw AllMaskedError("sample_action with every node masked");
  if (mode == SampleMode::Greedy) return best;

  const double u = rng.uniform();
  double acc = 0;
  int last_finite = -1;
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(log_probs[i])) continue;
    last_finite = i;
    acc += std::exp(log_probs[i]);
    if (u < acc) return i;
  }
  return last_finite;  // rounding leftover lands on the last candidate
}

}  // namespace rlpart
