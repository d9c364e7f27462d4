#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "adsorbrl/env.hpp"
#include "adsorbrl/error.hpp"
#include "support/synthetic.hpp"

using namespace adsorbrl;

namespace {

AtomicNumber z(const char* s) { return *ElementRegistry::builtin().find(s); }

AdsorbateEnergies only(Adsorbate a, double e) {
  AdsorbateEnergies es{};
  es[static_cast<std::size_t>(a)] = e;
  return es;
}

EnergyTable table_of(std::vector<EnergyRecord> rs) { return EnergyTable::reduce_min_energy(rs); }

// Pearson statistic of observed counts against a uniform expectation.
double chi_square_uniform(const std::vector<std::size_t>& counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  const double expected = static_cast<double>(n) / static_cast<double>(counts.size());
  double chi = 0.0;
  for (auto c : counts) chi += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return chi;
}

}  // namespace

TEST(GoalVector, ParseAndFormat) {
  const auto g = GoalVector::parse("+1,+1,+1,-1,-1,-1");
  EXPECT_EQ(g[Adsorbate::CH2], 1);
  EXPECT_EQ(g[Adsorbate::OH], -1);
  EXPECT_EQ(GoalVector::parse(g.to_string()), g);
  EXPECT_THROW(GoalVector::parse("1,1,1"), DomainError);
  EXPECT_THROW(GoalVector::parse("1,1,1,1,1,2"), DomainError);
  EXPECT_THROW(GoalVector::parse("1,1,1,1,1,x"), DomainError);
}

TEST(Reward, WorkedValues) {
  EXPECT_DOUBLE_EQ(reward(reward_mode::NegCubeEnergy{}, only(Adsorbate::OH2, -2.0), Adsorbate::OH2), 8.0);
  EXPECT_DOUBLE_EQ(reward(reward_mode::SquaredEnergy{}, only(Adsorbate::OH2, -3.0), Adsorbate::OH2), 9.0);
  EXPECT_DOUBLE_EQ(reward(reward_mode::NegEnergy{}, only(Adsorbate::OH2, -3.0), Adsorbate::OH2), 3.0);
  const AdsorbateEnergies e{-1.0, -2.0, -1.0, -1.0, -2.0, -2.0};
  const auto g = GoalVector::parse("+1,+1,+1,-1,-1,-1");
  EXPECT_DOUBLE_EQ(reward(reward_mode::GoalDot{g}, e, Adsorbate::OH2), -1.0);
  EXPECT_DOUBLE_EQ(reward(reward_mode::SubSampled{g, Adsorbate::CH4}, e, Adsorbate::OH2), 2.0);
  EXPECT_DOUBLE_EQ(reward(reward_mode::SubSampled{g, Adsorbate::OH}, e, Adsorbate::OH2), -2.0);
}

TEST(Reward, MissingEnergies) {
  EXPECT_THROW(reward(reward_mode::NegEnergy{}, AdsorbateEnergies{}, Adsorbate::OH2), DomainError);
  const GoalVector g;
  EXPECT_EQ(reward(reward_mode::GoalDot{g}, only(Adsorbate::N2, -2.0), Adsorbate::OH2), 2.0);
  EXPECT_EQ(reward(reward_mode::SubSampled{g, Adsorbate::CH2}, only(Adsorbate::N2, -2.0), Adsorbate::OH2), 0.0);
}

TEST(FullSpace, ActionIdsAndBlockedMoves) {
  const auto t = table_of({{Composition{1, 2, 3}, Adsorbate::OH2, -1.0}, {Composition{4}, Adsorbate::OH2, -2.0}});
  const FullSpaceEnv env(t, Adsorbate::OH2, 10.0, 20);
  ASSERT_EQ(env.action_count(), 4u + 5u);
  for (int a = 0; a < static_cast<int>(env.action_count()); ++a) EXPECT_EQ(env.encode(env.decode(a)), a);
  EXPECT_THROW(env.decode(9), DomainError);

  // Adding D to {A,B,C} is blocked.
  const int add_d = env.encode({FullActionKind::Add, 3});
  const auto tr = env.step(Composition{1, 2, 3}, add_d, 0);
  EXPECT_EQ(tr.next_state, (Composition{1, 2, 3}));
  EXPECT_FALSE(tr.done);

  const int nothing = env.encode({FullActionKind::DoNothing, 0});
  EXPECT_DOUBLE_EQ(env.step(Composition{4}, nothing, 0).reward, 2.0);
  // Unknown composition: penalty.
  EXPECT_DOUBLE_EQ(env.step(Composition{1}, nothing, 0).reward, -10.0);
  EXPECT_FALSE(env.step(Composition{1}, nothing, 0).done);

  const int term = env.encode({FullActionKind::Terminate, 0});
  EXPECT_TRUE(env.step(Composition{4}, term, 0).done);
  EXPECT_TRUE(env.step(Composition{4}, nothing, 19).done);

  const int remove0 = env.encode({FullActionKind::Remove, 0});
  EXPECT_EQ(env.step(Composition{4}, remove0, 0).next_state, Composition{4});
  EXPECT_EQ(env.step(Composition{1, 2, 3}, remove0, 0).next_state, (Composition{2, 3}));
}

TEST(FullSpace, ResetIsUniformOverKnownStates) {
  const auto t = table_of({{Composition{1}, Adsorbate::OH2, -1.0},
                           {Composition{2}, Adsorbate::OH2, -1.0},
                           {Composition{3}, Adsorbate::CH4, -1.0}});
  const FullSpaceEnv env(t, Adsorbate::OH2, 10.0, 20);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(env.is_valid(env.reset(rng)));
}

TEST(OfflineTuples, TwoStateTable) {
  const Composition a{z("Pt")};
  const Composition ab{z("Pt"), z("Au")};
  const auto t = table_of({{a, Adsorbate::OH2, -1.0}, {ab, Adsorbate::OH2, -2.0}});
  const auto tuples = build_offline_tuples(t, Adsorbate::OH2);
  // a: add Au, self-loop; ab: remove Au, remove Pt is invalid (Pt alone is a), self-loop.
  std::set<std::pair<Composition, Composition>> moves;
  for (const auto& tr : tuples) {
    EXPECT_FALSE(tr.done);
    EXPECT_DOUBLE_EQ(tr.reward, -*t.energy(tr.next_state, Adsorbate::OH2));
    moves.insert({tr.state, tr.next_state});
  }
  EXPECT_TRUE(moves.contains({a, ab}));
  EXPECT_TRUE(moves.contains({ab, a}));
  EXPECT_TRUE(moves.contains({a, a}));
  EXPECT_TRUE(moves.contains({ab, ab}));
  EXPECT_EQ(tuples.size(), 4u);
  EXPECT_TRUE(build_offline_tuples(EnergyTable{}, Adsorbate::OH2).empty());

  const auto penalties = build_penalty_tuples(t, Adsorbate::OH2, 50.0);
  std::size_t terminal = 0;
  for (const auto& tr : penalties) {
    if (tr.done) {
      ++terminal;
      EXPECT_EQ(tr.state, tr.next_state);
    } else {
      EXPECT_DOUBLE_EQ(tr.reward, -50.0);
      EXPECT_FALSE(t.energy(tr.next_state, Adsorbate::OH2).has_value());
    }
  }
  EXPECT_EQ(terminal, 2u);
}

// Oracle: every offline tuple must equal the full-space environment's own step.
TEST(OfflineTuples, AgreeWithEnvironmentDynamics) {
  const auto t = fixtures::synthetic_table({.vocabulary_size = 8, .binaries = 20, .ternaries = 30});
  const FullSpaceEnv env(t, Adsorbate::OH2, 100.0, 20);
  for (const auto& tr : build_offline_tuples(t, Adsorbate::OH2)) {
    const auto live = env.step(tr.state, tr.action, 0);
    EXPECT_EQ(live.next_state, tr.next_state);
    EXPECT_DOUBLE_EQ(live.reward, tr.reward);
  }
  for (const auto& tr : build_penalty_tuples(t, Adsorbate::OH2, 100.0)) {
    const auto live = env.step(tr.state, tr.action, 0);
    EXPECT_EQ(live.next_state, tr.next_state);
    EXPECT_DOUBLE_EQ(live.reward, tr.reward);
    EXPECT_EQ(live.done, tr.done);
  }
}

TEST(GridWorld, RewardsAndHorizon) {
  const auto t = table_of({{Composition{z("C")}, Adsorbate::OH2, -7.9}});
  const GridWorldEnv env(t);
  // B sits left of C.
  const auto tr = env.step(z("B"), Direction::Right, 0);
  EXPECT_EQ(tr.next_state, z("C"));
  EXPECT_NEAR(tr.reward, 62.41, 1e-12);
  EXPECT_FALSE(tr.done);
  EXPECT_EQ(env.step(z("Be"), Direction::Right, 0).reward, 0.0);  // blocked, unknown
  EXPECT_TRUE(env.step(z("B"), Direction::Stay, 8).done);
  EXPECT_THROW(env.step(z("B"), Direction::Stay, 9), DomainError);
}

TEST(GridWorld, ResetIsUniformOverAllElements) {
  const GridWorldEnv env(EnergyTable{});
  Rng rng(11);
  std::vector<std::size_t> counts(86);
  for (int i = 0; i < 10'000; ++i) ++counts[static_cast<std::size_t>(env.reset(rng) - 1)];
  // 99.9th percentile of chi-square with 85 degrees of freedom.
  EXPECT_LT(chi_square_uniform(counts), 130.0);
}

TEST(Subgraph, NoOpAndStopRules) {
  const auto t = table_of({{Composition{1, 2}, Adsorbate::OH2, -2.0},
                           {Composition{1}, Adsorbate::OH2, -1.0},
                           {Composition{3}, Adsorbate::OH2, -0.5}});
  const SubgraphEnv env(t, {Adsorbate::OH2}, {20, 0.9, 0});
  Rng rng(1);
  const reward_mode::NegCubeEnergy mode;

  auto tr = env.step(Composition{1, 2}, static_cast<int>(SubgraphAction::RemoveThird), 0, mode, rng);
  EXPECT_EQ(tr.next_state, (Composition{1, 2}));
  EXPECT_EQ(tr.reward, 0.0);
  EXPECT_FALSE(tr.done);

  tr = env.step(Composition{1, 2}, static_cast<int>(SubgraphAction::Stop), 0, mode, rng);
  EXPECT_TRUE(tr.done);
  EXPECT_DOUBLE_EQ(tr.reward, 8.0);

  // RemoveSecond drops Z=2, landing on the known {1}.
  tr = env.step(Composition{1, 2}, static_cast<int>(SubgraphAction::RemoveSecond), 0, mode, rng);
  EXPECT_EQ(tr.next_state, Composition{1});
  EXPECT_EQ(tr.reward, 0.0);
  // RemoveFirst would leave {2}, which is unknown.
  tr = env.step(Composition{1, 2}, static_cast<int>(SubgraphAction::RemoveFirst), 0, mode, rng);
  EXPECT_EQ(tr.next_state, (Composition{1, 2}));

  // Last allowed step ends the episode with the terminal reward.
  tr = env.step(Composition{1}, static_cast<int>(SubgraphAction::RemoveFirst), 19, mode, rng);
  EXPECT_TRUE(tr.done);
  EXPECT_DOUBLE_EQ(tr.reward, 1.0);

  EXPECT_THROW(env.step(Composition{2}, 0, 0, mode, rng), DomainError);
  EXPECT_THROW(env.step(Composition{1}, 5, 0, mode, rng), DomainError);
}

TEST(Subgraph, AddFromSingleCompositionNeverEscapes) {
  const auto t = table_of({{Composition{z("Pt")}, Adsorbate::OH2, -1.0}});
  const SubgraphEnv env(t, {Adsorbate::OH2}, {20, 0.9, 0});
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    for (int a = 0; a < 4; ++a) {
      const auto tr = env.step(Composition{z("Pt")}, a, 0, reward_mode::NegEnergy{}, rng);
      EXPECT_EQ(tr.next_state, Composition{z("Pt")});
      EXPECT_EQ(tr.reward, 0.0);
    }
    EXPECT_EQ(env.reset(rng), Composition{z("Pt")});
  }
}

TEST(Subgraph, AddDrawsUniformlyAmongAbsentElements) {
  // Every {1, x} is known, so each Add from {1} reveals which element was drawn.
  std::vector<EnergyRecord> rs{{Composition{1}, Adsorbate::OH2, -1.0}};
  for (AtomicNumber x = 2; x <= 6; ++x) rs.push_back({Composition{1, x}, Adsorbate::OH2, -1.0});
  const auto t = table_of(rs);
  const SubgraphEnv env(t, {Adsorbate::OH2}, {20, 0.9, 0});
  Rng rng(9);
  std::vector<std::size_t> counts(5);
  for (int i = 0; i < 10'000; ++i) {
    const auto tr = env.step(Composition{1}, 0, 0, reward_mode::NegEnergy{}, rng);
    ASSERT_EQ(tr.next_state.size(), 2u);
    ++counts[static_cast<std::size_t>(tr.next_state[1] - 2)];
  }
  // 99.9th percentile of chi-square with 4 degrees of freedom.
  EXPECT_LT(chi_square_uniform(counts), 18.47);
}

TEST(Subgraph, SeededResetsRepeat) {
  const auto t = fixtures::synthetic_table({.vocabulary_size = 10, .binaries = 20, .ternaries = 20});
  const SubgraphEnv env(t, {Adsorbate::OH2}, {20, 0.9, 0});
  Rng a(42), b(42);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(env.reset(a), env.reset(b));
}

TEST(EpisodeConfig, Validation) {
  EXPECT_THROW((EpisodeConfig{0, 0.9, 0}).validate(), DomainError);
  EXPECT_THROW((EpisodeConfig{5, 0.0, 0}).validate(), DomainError);
  EXPECT_THROW((EpisodeConfig{5, 1.5, 0}).validate(), DomainError);
  EXPECT_NO_THROW((EpisodeConfig{5, 1.0, 0}).validate());
}
