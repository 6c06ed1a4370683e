#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace anderson_pi {

// Finite MDP with state-action rewards. Transitions are stored densely,
// flattened as [state][action][next_state].
class TabularMdp {
 public:
  TabularMdp() = default;
  TabularMdp(std::size_t n_states, std::size_t n_actions, std::vector<double> transitions,
             std::vector<double> rewards, double gamma);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  std::size_t n_pairs() const noexcept { return n_states_ * n_actions_; }
  double gamma() const noexcept { return gamma_; }

  // Distribution over next states for (s, a).
  std::span<const double> row(std::size_t s, std::size_t a) const {
    return {transitions_.data() + (s * n_actions_ + a) * n_states_, n_states_};
  }
  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions_[(s * n_actions_ + a) * n_states_ + next];
  }
  double reward(std::size_t s, std::size_t a) const { return rewards_[s * n_actions_ + a]; }

  const std::vector<double>& transitions() const noexcept { return transitions_; }
  const std::vector<double>& rewards() const noexcept { return rewards_; }

  friend bool operator==(const TabularMdp&, const TabularMdp&) = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> transitions_;
  std::vector<double> rewards_;
  double gamma_ = 0.0;
};

inline constexpr double kProbabilitySumTolerance = 1e-12;

TabularMdp generate_random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                               std::size_t branching, double reward_scale, double gamma);

// Grid navigation with actions {up, right, down, left}. State index is
// row * width + col with row 0 at the top; the goal is the top-right cell.
TabularMdp generate_gridworld(std::size_t width, std::size_t height, double slip_prob,
                              double goal_reward, double gamma);

std::size_t gridworld_goal_state(std::size_t width);

// One message per violated invariant; empty means valid.
std::vector<std::string> validate(const TabularMdp& mdp);

std::string to_json_text(const TabularMdp& mdp);
TabularMdp mdp_from_json_text(const std::string& text);

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);
TabularMdp load_mdp(const std::filesystem::path& path);

}  // namespace anderson_pi
