#include "anderson_pi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "anderson_pi/errors.hpp"

namespace anderson_pi {

namespace {

// Portable [0, 1) draw; std::uniform_real_distribution is implementation-defined.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return std::min(i, n - 1);
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions,
                       std::vector<double> transitions, std::vector<double> rewards,
                       double gamma)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      gamma_(gamma) {
  if (n_states_ == 0 || n_actions_ == 0) {
    throw ParameterError("TabularMdp: n_states and n_actions must be positive");
  }
  if (transitions_.size() != n_states_ * n_actions_ * n_states_) {
    throw ParameterError("TabularMdp: transitions size does not match n_states^2 * n_actions");
  }
  if (rewards_.size() != n_states_ * n_actions_) {
    throw ParameterError("TabularMdp: rewards size does not match n_states * n_actions");
  }
}

TabularMdp generate_random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                               std::size_t branching, double reward_scale, double gamma) {
  if (n_states < 1 || n_actions < 1) {
    throw ParameterError("generate_random_mdp: n_states and n_actions must be >= 1");
  }
  if (branching < 1 || branching > n_states) {
    throw ParameterError("generate_random_mdp: branching must lie in [1, n_states]");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ParameterError("generate_random_mdp: gamma must lie in [0, 1)");
  }
  if (!std::isfinite(reward_scale) || reward_scale < 0.0) {
    throw ParameterError("generate_random_mdp: reward_scale must be finite and >= 0");
  }

  std::mt19937_64 rng(seed);
  std::vector<double> transitions(n_states * n_actions * n_states, 0.0);
  std::vector<double> rewards(n_states * n_actions, 0.0);
  std::vector<std::size_t> candidates(n_states);

  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      std::iota(candidates.begin(), candidates.end(), std::size_t{0});
      // partial Fisher-Yates: first `branching` slots become the support
      for (std::size_t i = 0; i < branching; ++i) {
        std::swap(candidates[i], candidates[i + uniform_index(rng, n_states - i)]);
      }
      double* row = transitions.data() + (s * n_actions + a) * n_states;
      double total = 0.0;
      for (std::size_t i = 0; i < branching; ++i) {
        const double w = 1.0 - uniform01(rng);  // (0, 1], strictly positive
        row[candidates[i]] = w;
        total += w;
      }
      for (std::size_t i = 0; i < branching; ++i) row[candidates[i]] /= total;
      rewards[s * n_actions + a] = reward_scale * (2.0 * uniform01(rng) - 1.0);
    }
  }
  return {n_states, n_actions, std::move(transitions), std::move(rewards), gamma};
}

std::size_t gridworld_goal_state(std::size_t width) { return width - 1; }

TabularMdp generate_gridworld(std::size_t width, std::size_t height, double slip_prob,
                              double goal_reward, double gamma) {
  if (width < 1 || height < 1) throw ParameterError("generate_gridworld: width, height >= 1");
  if (!(slip_prob >= 0.0 && slip_prob < 1.0)) {
    throw ParameterError("generate_gridworld: slip_prob must lie in [0, 1)");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ParameterError("generate_gridworld: gamma must lie in [0, 1)");
  }
  constexpr std::size_t kActions = 4;
  constexpr int kDr[kActions] = {-1, 0, 1, 0};  // up, right, down, left
  constexpr int kDc[kActions] = {0, 1, 0, -1};

  const std::size_t n = width * height;
  const std::size_t goal = gridworld_goal_state(width);
  std::vector<double> transitions(n * kActions * n, 0.0);
  std::vector<double> rewards(n * kActions, 0.0);

  auto move = [&](std::size_t s, std::size_t dir) {
    const auto r = static_cast<long>(s / width) + kDr[dir];
    const auto c = static_cast<long>(s % width) + kDc[dir];
    if (r < 0 || c < 0 || r >= static_cast<long>(height) || c >= static_cast<long>(width)) {
      return s;
    }
    return static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c);
  };

  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < kActions; ++a) {
      double* row = transitions.data() + (s * kActions + a) * n;
      if (s == goal) {
        row[s] = 1.0;
        continue;
      }
      for (std::size_t dir = 0; dir < kActions; ++dir) {
        const double w = dir == a ? 1.0 - slip_prob : slip_prob / 3.0;
        row[move(s, dir)] += w;
      }
      rewards[s * kActions + a] = goal_reward * row[goal];
    }
  }
  return {n, kActions, std::move(transitions), std::move(rewards), gamma};
}

std::vector<std::string> validate(const TabularMdp& mdp) {
  std::vector<std::string> issues;
  if (!(mdp.gamma() >= 0.0 && mdp.gamma() < 1.0)) {
    std::ostringstream os;
    os << "discount not in [0,1): gamma = " << mdp.gamma();
    issues.push_back(os.str());
  }
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const auto row = mdp.row(s, a);
      double total = 0.0;
      bool bad_entry = false;
      for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) bad_entry = true;
        total += p;
      }
      if (bad_entry) {
        std::ostringstream os;
        os << "transition probability outside [0,1] at (s=" << s << ", a=" << a << ")";
        issues.push_back(os.str());
      }
      if (!(std::abs(total - 1.0) <= kProbabilitySumTolerance)) {
        std::ostringstream os;
        os.precision(17);
        os << "transition row (s=" << s << ", a=" << a << ") sums to " << total;
        issues.push_back(os.str());
      }
      if (!std::isfinite(mdp.reward(s, a))) {
        std::ostringstream os;
        os << "non-finite reward at (s=" << s << ", a=" << a << ")";
        issues.push_back(os.str());
      }
    }
  }
  return issues;
}

}  // namespace anderson_pi
