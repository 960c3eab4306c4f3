/*
 * Copyright 2026 The hapticgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <hapticgp/shapley.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <random>

using namespace hapticgp;

namespace {

CharacteristicFn table_game(std::vector<double> table, std::size_t m)
{
	return CharacteristicFn(m, [table = std::move(table)](const FeatureSubset& s) { return table[s.mask()]; });
}

CharacteristicFn random_game(std::size_t m, std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	std::vector<double> t(std::size_t{1} << m);
	for (auto& x : t)
		x = u(rng);
	t[0] = 0.0;
	return table_game(std::move(t), m);
}

// Shapley values by averaging marginals over all M! orderings.
std::vector<double> brute_force(const CharacteristicFn& v)
{
	const std::size_t m = v.features();
	std::vector<std::size_t> perm(m);
	std::iota(perm.begin(), perm.end(), 0);
	std::vector<double> phi(m, 0.0);
	double count = 0.0;
	do {
		FeatureSubset::mask_type s = 0;
		for (auto a : perm) {
			const double before = v.value(s);
			s |= FeatureSubset::mask_type{1} << a;
			phi[a] += v.value(s) - before;
		}
		count += 1.0;
	} while (std::next_permutation(perm.begin(), perm.end()));
	for (auto& p : phi)
		p /= count;
	return phi;
}

} // namespace

TEST(Exact, TwoFeatureHandExample)
{
	const auto v = table_game({0.0, 1.0, 2.0, 4.0}, 2);
	const auto r = shapley_exact(v);
	EXPECT_EQ(r.phi[0], 1.5);
	EXPECT_EQ(r.phi[1], 2.5);
	EXPECT_EQ(r.v_full, 4.0);
	EXPECT_EQ(r.v_empty, 0.0);
}

TEST(Exact, AdditiveGameReturnsWeights)
{
	const std::vector<double> w{0.5, -1.25, 2.0, 3.0, 0.125};
	CharacteristicFn v(5, [w](const FeatureSubset& s) {
		double t = 0.0;
		for (auto a : s.indices())
			t += w[a];
		return t;
	});
	const auto r = shapley_exact(v);
	for (std::size_t a = 0; a < w.size(); ++a)
		EXPECT_NEAR(r.phi[a], w[a], 1e-12);
}

TEST(Exact, SymmetricGame)
{
	CharacteristicFn v(3, [](const FeatureSubset& s) { return std::pow(static_cast<double>(s.size()), 1.7); });
	const auto r = shapley_exact(v);
	EXPECT_NEAR(r.phi[0], r.phi[1], 1e-12);
	EXPECT_NEAR(r.phi[1], r.phi[2], 1e-12);
}

TEST(Exact, MatchesPermutationBruteForce)
{
	for (std::uint64_t seed : {1u, 2u, 3u}) {
		const auto v = random_game(6, seed);
		const auto r = shapley_exact(v);
		const auto b = brute_force(v);
		for (std::size_t a = 0; a < 6; ++a)
			EXPECT_NEAR(r.phi[a], b[a], 1e-12);
	}
}

TEST(Exact, EachSubsetEvaluatedOnce)
{
	std::atomic<int> calls{0};
	CharacteristicFn v(7, [&calls](const FeatureSubset& s) {
		++calls;
		return static_cast<double>(s.mask() % 13);
	});
	const auto r = shapley_exact(v, 4);
	EXPECT_EQ(calls.load(), 128);
	EXPECT_EQ(r.evaluations, 128u);
	(void)v.value(5);
	EXPECT_EQ(v.evaluations(), 128u);
	EXPECT_EQ(calls.load(), 128);
}

TEST(Exact, TooManyFeatures)
{
	CharacteristicFn v(21, [](const FeatureSubset&) { return 0.0; });
	EXPECT_THROW(shapley_exact(v), ShapleyError);
}

TEST(Evaluator, FailureCarriesMask)
{
	CharacteristicFn v(3, [](const FeatureSubset& s) -> double {
		if (s.mask() == 5)
			throw std::runtime_error("boom");
		return 1.0;
	});
	try {
		shapley_exact(v);
		FAIL();
	} catch (const ShapleyError& e) {
		EXPECT_EQ(e.kind(), ShapleyError::Kind::EvaluatorFailure);
		ASSERT_TRUE(e.mask().has_value());
		EXPECT_EQ(*e.mask(), 5u);
	}
}

TEST(Axioms, SuitePassesOnConstructedGames)
{
	// Feature 3 is a dummy, features 0 and 1 are interchangeable.
	CharacteristicFn v(4, [](const FeatureSubset& s) {
		const double a = s.contains(0) + s.contains(1);
		return a * a + 2.0 * s.contains(2) + 0.5 * a * s.contains(2);
	});
	const auto r = shapley_exact(v);
	const auto verdict = axiom_suite(v, r);
	EXPECT_TRUE(verdict.ok()) << (verdict.failures.empty() ? "" : verdict.failures.front());
	EXPECT_NEAR(r.phi[3], 0.0, 1e-12);
	EXPECT_NEAR(r.phi[0], r.phi[1], 1e-12);
}

TEST(Axioms, LinearityOnRandomGames)
{
	const auto v1 = random_game(4, 10);
	const auto v2 = random_game(4, 11);
	const auto verdict = axiom_suite(v1, shapley_exact(v1), &v2);
	EXPECT_TRUE(verdict.linearity);
	EXPECT_TRUE(verdict.transferability);
}

TEST(Axioms, TransferabilityCheckIsSensitive)
{
	const auto v = random_game(4, 12);
	auto r = shapley_exact(v);
	r.phi[2] += 1e-6;
	const auto verdict = axiom_suite(v, r);
	EXPECT_FALSE(verdict.transferability);
	EXPECT_FALSE(verdict.ok());
}

TEST(Axioms, MonotonicityOnDominatingPair)
{
	// v1 = v2 + extra marginal for feature 1 on every subset.
	const auto v2 = random_game(4, 13);
	CharacteristicFn v1(4, [v2](const FeatureSubset& s) { return v2(s) + (s.contains(1) ? 0.3 : 0.0); });
	const auto p1 = shapley_exact(v1).phi, p2 = shapley_exact(v2).phi;
	const auto res = monotonicity_holds(v1, v2, p1, p2, 1);
	ASSERT_TRUE(res.has_value());
	EXPECT_TRUE(*res);
	EXPECT_GE(p1[1], p2[1]);
	EXPECT_TRUE(axiom_suite(v1, shapley_exact(v1), &v2).monotonicity);
}

TEST(Sampled, SinglePermutationIsItsMarginals)
{
	const auto v = random_game(5, 14);
	const auto r = shapley_sampled(v, 1, 99);
	std::mt19937_64 rng(99);
	std::vector<std::size_t> perm(5);
	std::iota(perm.begin(), perm.end(), 0);
	std::shuffle(perm.begin(), perm.end(), rng);
	FeatureSubset::mask_type s = 0;
	for (auto a : perm) {
		const double before = v.value(s);
		s |= FeatureSubset::mask_type{1} << a;
		EXPECT_EQ(r.phi[a], v.value(s) - before);
		EXPECT_EQ(r.stderr_[a], 0.0);
	}
}

TEST(Sampled, DeterministicPerSeed)
{
	const auto v = random_game(6, 15);
	const auto a = shapley_sampled(v, 200, 7), b = shapley_sampled(v, 200, 7);
	EXPECT_EQ(a.phi, b.phi);
	EXPECT_EQ(a.stderr_, b.stderr_);
	EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Sampled, UnbiasedOverSeeds)
{
	const auto v = random_game(6, 16);
	const auto exact = shapley_exact(v).phi;
	const int seeds = 100;
	std::vector<double> mean(6, 0.0), var(6, 0.0);
	for (int s = 0; s < seeds; ++s) {
		const auto r = shapley_sampled(v, 500, static_cast<std::uint64_t>(s));
		for (std::size_t a = 0; a < 6; ++a) {
			mean[a] += r.phi[a] / seeds;
			var[a] += r.stderr_[a] * r.stderr_[a];
		}
	}
	for (std::size_t a = 0; a < 6; ++a) {
		const double combined = std::sqrt(var[a]) / seeds;
		EXPECT_LE(std::abs(mean[a] - exact[a]), 3.0 * combined) << a;
	}
}

TEST(Select, TopK)
{
	ShapleyReport r;
	r.phi = {3.0, 1.0, 2.0};
	EXPECT_EQ(select_top_k(r, 2), FeatureSubset::of({0, 2}, 3));
	r.phi = {1.0, 1.0, 1.0, 1.0};
	EXPECT_EQ(select_top_k(r, 2), FeatureSubset::of({0, 1}, 4));
	ShapleyReport a, b;
	a.phi = {0.3, -0.2, 0.9, 0.1, 0.5};
	b.phi = a.phi;
	for (auto& p : b.phi)
		p = 2.0 * p + 5.0;
	for (std::size_t k = 1; k <= 5; ++k)
		EXPECT_EQ(select_top_k(a, k), select_top_k(b, k));
}

TEST(Report, JsonRoundTrip)
{
	const auto v = random_game(4, 17);
	const auto r = shapley_sampled(v, 50, 3);
	const auto back = ShapleyReport::from_json(nlohmann::json::parse(r.to_json().dump()));
	EXPECT_EQ(back.phi, r.phi);
	EXPECT_EQ(back.stderr_, r.stderr_);
	EXPECT_EQ(back.evaluations, r.evaluations);
}

TEST(FeatureValue, FullBeatsEmptyOnCleanTrace)
{
	const auto trace = normalize(generate_synthetic(SyntheticKind::Sine, 300, 0.0, 3));
	const auto v = make_feature_value_fn(FeatureDataset::same_side(trace));
	EXPECT_GT(v.v_full(), v.v_empty());
	const double before = static_cast<double>(v.evaluations());
	(void)v.v_full();
	EXPECT_EQ(static_cast<double>(v.evaluations()), before);
}

TEST(FeatureValue, DuplicatedColumnsShareValue)
{
	// Ten inputs where input 9 duplicates input 0.
	const auto trace = normalize(generate_synthetic(SyntheticKind::Drag, 240, 0.01, 4));
	auto data = FeatureDataset::same_side(trace);
	Eigen::MatrixXd inputs(data.inputs.rows(), 10);
	inputs << data.inputs, data.inputs.col(0);
	data.inputs = inputs;
	data.input_names.push_back("fx_copy");
	EvaluatorBudget budget;
	budget.max_train_pairs = 40;
	budget.max_validation_pairs = 40;
	const auto v = make_feature_value_fn(data, budget);
	const auto r = shapley_exact(v);
	EXPECT_NEAR(r.phi[0], r.phi[9], 1e-10);
	EXPECT_EQ(r.evaluations, 1024u);
	EXPECT_TRUE(axiom_suite(v, r).transferability);
}

TEST(FeatureValue, TooShort)
{
	const auto trace = normalize(generate_synthetic(SyntheticKind::Sine, 21, 0.0, 3));
	auto data = FeatureDataset::same_side(trace);
	data.inputs = data.inputs.topRows(12).eval();
	data.targets = data.targets.topRows(12).eval();
	EXPECT_THROW(make_feature_value_fn(data), ShapleyError);
}
