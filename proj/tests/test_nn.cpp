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

#include <hapticgp/nn.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace hapticgp;

namespace {

/// Gap between the right and left difference slopes at step h.
template <class F>
double slope_gap(F&& loss_at, double w, double base, double h)
{
	return std::abs((loss_at(w + h) - base) - (base - loss_at(w - h))) / h;
}

std::vector<TrainingExample> random_examples(std::size_t n, std::size_t dim, std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> g(0.0, 1.0);
	std::uniform_real_distribution<double> u(0.2, 1.5);
	std::vector<TrainingExample> out(n);
	for (auto& e : out) {
		e.input.resize(static_cast<Eigen::Index>(dim));
		for (auto& v : e.input)
			v = g(rng);
		for (std::size_t f = 0; f < kFeatureCount; ++f)
			e.target.push_back({0.5 * g(rng), u(rng)});
	}
	return out;
}

double sample_variance(const Eigen::Map<const Eigen::MatrixXd>& w)
{
	const double n = static_cast<double>(w.size());
	const double mean = w.sum() / n;
	return (w.array() - mean).square().sum() / (n - 1.0);
}

} // namespace

TEST(Init, DeterministicPerSeed)
{
	const auto cfg = NetConfig::fully_connected(90);
	EXPECT_EQ(TrainedNet::init(cfg, 3).params(), TrainedNet::init(cfg, 3).params());
	EXPECT_NE(TrainedNet::init(cfg, 3).params(), TrainedNet::init(cfg, 4).params());
}

TEST(Init, HeVarianceOnWidth100Layers)
{
	const auto net = TrainedNet::init(NetConfig::fully_connected(90), 11);
	for (std::size_t l = 1; l + 1 < net.layers().size(); ++l) {
		ASSERT_EQ(net.layers()[l].in, 100u);
		EXPECT_NEAR(sample_variance(net.weight(l)), 2.0 / 100.0, 0.1 * 2.0 / 100.0) << "layer " << l;
	}
}

TEST(Forward, ZeroInputGivesUnitVariance)
{
	for (auto cfg : {NetConfig::fully_connected(90), NetConfig::residual(90)}) {
		const auto net = TrainedNet::init(cfg, 1);
		const auto out = net.forward(Eigen::VectorXd::Zero(90));
		ASSERT_EQ(out.size(), kFeatureCount);
		for (const auto& p : out) {
			EXPECT_EQ(p.mean, 0.0);
			EXPECT_EQ(p.variance, 1.0);
		}
	}
}

TEST(Forward, EvalIsDeterministic)
{
	const auto net = TrainedNet::init(NetConfig::residual(30), 2);
	const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(30, -1.0, 1.0);
	const auto a = net.forward(x), b = net.forward(x);
	for (std::size_t f = 0; f < kFeatureCount; ++f) {
		EXPECT_EQ(a[f].mean, b[f].mean);
		EXPECT_EQ(a[f].variance, b[f].variance);
	}
}

TEST(Forward, VariancePositive)
{
	std::mt19937_64 rng(5);
	std::normal_distribution<double> g(0.0, 3.0);
	NetConfig cfg{Architecture::FullyConnected, 2, 16, 0.0, 8};
	int trials = 0;
	for (int n = 0; n < 100; ++n) {
		const auto net = TrainedNet::init(cfg, static_cast<std::uint64_t>(n));
		for (int r = 0; r < 100; ++r) {
			Eigen::VectorXd x(8);
			for (auto& v : x)
				v = g(rng);
			for (const auto& p : net.forward(x))
				EXPECT_GT(p.variance, 0.0);
			++trials;
		}
	}
	EXPECT_EQ(trials, 10000);
}

TEST(Forward, ZeroedResidualBranchesLeaveSkipPath)
{
	NetConfig cfg{Architecture::ResidualMlp, 4, 12, 0.0, 6};
	auto net = TrainedNet::init(cfg, 9);
	for (std::size_t b = 0; b < cfg.depth; ++b)
		for (std::size_t l : {1 + 2 * b, 2 + 2 * b}) {
			net.weight(l).setZero();
			net.bias(l).setZero();
		}
	Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -2.0, 3.0);
	const std::size_t head = net.layers().size() - 1;
	const Eigen::VectorXd stem = ((net.weight(0) * x) + net.bias(0)).cwiseMax(0.0);
	const Eigen::VectorXd expect = net.weight(head) * stem + net.bias(head);
	const Eigen::MatrixXd out = net.forward_batch(x, Mode::Eval);
	for (Eigen::Index i = 0; i < out.rows(); ++i)
		EXPECT_NEAR(out(i, 0), expect[i], 1e-12);
}

TEST(Forward, DropoutExpectationMatchesEval)
{
	NetConfig cfg{Architecture::FullyConnected, 1, 32, 0.3, 5};
	const auto net = TrainedNet::init(cfg, 4);
	const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, 0.5, 2.0);
	const Eigen::MatrixXd eval = net.forward_batch(x, Mode::Eval);
	std::mt19937_64 rng(1);
	// One hidden layer into a linear head: the train-mode output is unbiased.
	Eigen::VectorXd sum = Eigen::VectorXd::Zero(eval.rows()), sq = sum;
	const int n = 20000;
	for (int i = 0; i < n; ++i) {
		const Eigen::VectorXd o = net.forward_batch(x, Mode::Train, &rng).col(0);
		sum += o;
		sq += o.cwiseProduct(o);
	}
	for (Eigen::Index r = 0; r < eval.rows(); ++r) {
		const double mean = sum[r] / n;
		const double se = std::sqrt(std::max(sq[r] / n - mean * mean, 0.0) / n);
		EXPECT_NEAR(mean, eval(r, 0), 5.0 * se + 1e-12) << r;
	}
}

TEST(Forward, DimensionMismatch)
{
	const auto net = TrainedNet::init(NetConfig::fully_connected(90), 1);
	EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(30)), NnError);
}

TEST(Gradient, MatchesFiniteDifferences)
{
	// Small nets, dropout off, grids frozen at the base point.
	std::mt19937_64 rng(123);
	std::uniform_int_distribution<int> pick_depth(1, 3), pick_width(4, 16);
	int checked = 0, kinks = 0;
	for (int draw = 0; draw < 50; ++draw) {
		const auto arch = draw % 2 ? Architecture::ResidualMlp : Architecture::FullyConnected;
		NetConfig cfg{arch, static_cast<std::size_t>(pick_depth(rng)), static_cast<std::size_t>(pick_width(rng)), 0.0, 7};
		auto net = TrainedNet::init(cfg, static_cast<std::uint64_t>(draw));
		const auto data = random_examples(4, 7, 1000 + static_cast<std::uint64_t>(draw));
		GridSet grids;
		const auto base = loss_and_gradient(net, data, LossKind::Jsd, kDefaultBins, nullptr, &grids);
		std::uniform_int_distribution<Eigen::Index> pick(0, net.params().size() - 1);
		for (int k = 0; k < 5; ++k) {
			const Eigen::Index i = pick(rng);
			const double h = 1e-5;
			const double w = net.params()[i];
			net.params()[i] = w + h;
			const double up = loss_and_gradient(net, data, LossKind::Jsd, kDefaultBins, &grids).loss;
			net.params()[i] = w - h;
			const double dn = loss_and_gradient(net, data, LossKind::Jsd, kDefaultBins, &grids).loss;
			net.params()[i] = w;
			const double fd = (up - dn) / (2 * h);
			const double an = base.grad[i];
			const double scale = std::max({std::abs(an), std::abs(fd), 1e-4});
			// A ReLU sitting exactly at zero (a dead layer feeding a zero bias)
			// makes the one-sided slopes disagree by a gap that does not shrink with h.
			auto loss_at = [&](double v) {
				net.params()[i] = v;
				const double l = loss_and_gradient(net, data, LossKind::Jsd, kDefaultBins, &grids).loss;
				net.params()[i] = w;
				return l;
			};
			const double gap = slope_gap(loss_at, w, base.loss, h);
			if (gap > 1e-3 * scale && slope_gap(loss_at, w, base.loss, h / 10) > 0.5 * gap) {
				++kinks;
				continue;
			}
			EXPECT_LE(std::abs(an - fd), 1e-3 * scale)
			    << "draw " << draw << " param " << i << " analytic " << an << " fd " << fd;
			++checked;
		}
	}
	EXPECT_LE(kinks, 5);
	EXPECT_EQ(checked + kinks, 250);
}

TEST(Gradient, SquaredErrorMatchesFiniteDifferences)
{
	NetConfig cfg{Architecture::FullyConnected, 2, 8, 0.0, 5};
	auto net = TrainedNet::init(cfg, 3);
	const auto data = random_examples(6, 5, 2);
	const auto base = loss_and_gradient(net, data, LossKind::SquaredError);
	for (Eigen::Index i = 0; i < net.params().size(); i += 7) {
		const double w = net.params()[i], h = 1e-6;
		net.params()[i] = w + h;
		const double up = mean_loss(net, data, LossKind::SquaredError);
		net.params()[i] = w - h;
		const double dn = mean_loss(net, data, LossKind::SquaredError);
		net.params()[i] = w;
		const double fd = (up - dn) / (2 * h);
		EXPECT_LE(std::abs(base.grad[i] - fd), 1e-5 * std::max(1.0, std::abs(fd)));
	}
}

TEST(Train, ZeroEpochsIsNoOp)
{
	const auto net = TrainedNet::init(NetConfig{Architecture::FullyConnected, 2, 8, 0.1, 4}, 7);
	TrainConfig tc;
	tc.epochs = 0;
	const auto out = train(net, random_examples(10, 4, 1), tc);
	EXPECT_EQ(out, net);
}

TEST(Train, CollapsesToConstantTarget)
{
	auto data = random_examples(64, 6, 3);
	for (auto& e : data)
		for (auto& t : e.target)
			t = {0.3, 0.5};
	NetConfig cfg{Architecture::FullyConnected, 2, 16, 0.0, 6};
	TrainConfig tc;
	tc.epochs = 200;
	tc.seed = 5;
	const auto net = train(TrainedNet::init(cfg, 1), data, tc);
	EXPECT_LE(mean_loss(net, data) / kFeatureCount, 0.01);
	EXPECT_EQ(net.train_log().size(), 200u);
}

TEST(Train, LossTrendAndDeterminism)
{
	const auto data = random_examples(96, 6, 4);
	NetConfig cfg{Architecture::FullyConnected, 2, 16, 0.0, 6};
	TrainConfig tc;
	tc.epochs = 100;
	tc.seed = 8;
	const auto a = train(TrainedNet::init(cfg, 2), data, tc);
	const auto b = train(TrainedNet::init(cfg, 2), data, tc);
	EXPECT_EQ(a.train_log(), b.train_log());
	EXPECT_EQ(a.params(), b.params());
	const auto& log = a.train_log();
	EXPECT_LE(log.back(), log.front());
	// 10-epoch moving average over the last 80% of epochs, at most 5% upward steps.
	std::vector<double> ma;
	for (std::size_t e = 9; e < log.size(); ++e) {
		double s = 0.0;
		for (std::size_t k = e - 9; k <= e; ++k)
			s += log[k];
		ma.push_back(s / 10.0);
	}
	const std::size_t start = ma.size() - (ma.size() * 8) / 10;
	std::size_t up = 0, steps = 0;
	for (std::size_t i = start + 1; i < ma.size(); ++i, ++steps)
		up += ma[i] > ma[i - 1] ? 1 : 0;
	EXPECT_LE(static_cast<double>(up), 0.05 * static_cast<double>(steps) + 1e-9) << up << " of " << steps;
}

TEST(Train, DivergenceCarriesEpoch)
{
	const auto data = random_examples(32, 4, 6);
	TrainConfig tc;
	tc.lr = 1e6;
	tc.epochs = 50;
	try {
		(void)train(TrainedNet::init(NetConfig{Architecture::FullyConnected, 3, 16, 0.0, 4}, 1), data, tc);
		FAIL() << "expected DivergentTraining";
	} catch (const NnError& e) {
		EXPECT_EQ(e.kind(), NnError::Kind::DivergentTraining);
		EXPECT_GE(e.epoch(), 0);
	}
}

TEST(Serialization, JsonAndLossLog)
{
	const auto data = random_examples(16, 4, 6);
	TrainConfig tc;
	tc.epochs = 5;
	const auto net = train(TrainedNet::init(NetConfig{Architecture::ResidualMlp, 2, 8, 0.1, 4}, 1), data, tc);
	const auto back = TrainedNet::from_json(nlohmann::json::parse(net.to_json().dump()));
	EXPECT_EQ(back, net);
	std::ostringstream log;
	write_loss_log(log, net);
	std::istringstream in(log.str());
	std::string line;
	int rows = 0;
	while (std::getline(in, line))
		++rows;
	EXPECT_EQ(rows, 2 + 5);
}
