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

/**
 * \file hapticgp/nn.hpp
 *
 * \brief Compact predictors emitting a Gaussian (mean, log-variance) per
 *  output channel: a plain ReLU MLP and a residual MLP. Trained with SGD and
 *  momentum, either against GP predictive distributions with the binned JSD
 *  or against true samples with squared error.
 */

#ifndef HAPTICGP_NN_HPP
#define HAPTICGP_NN_HPP

#include <hapticgp/core.hpp>
#include <hapticgp/detail/text.hpp>
#include <hapticgp/divergence.hpp>
#include <hapticgp/gp.hpp>

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hapticgp {

class NnError : public Error
{
public:
	enum class Kind { DimensionMismatch, DivergentTraining, InvalidConfig, Format };

	NnError(Kind kind, const std::string& message, int epoch = -1) : Error(message), kind_(kind), epoch_(epoch) {}

	Kind kind() const noexcept { return kind_; }
	/// Epoch index at which training diverged, else -1.
	int epoch() const noexcept { return epoch_; }

private:
	Kind kind_;
	int epoch_;
};

enum class Architecture { FullyConnected, ResidualMlp };

inline std::string_view to_string(Architecture a) { return a == Architecture::FullyConnected ? "fc" : "resnet"; }

inline Architecture architecture_from_string(std::string_view s)
{
	if (s == "fc" || s == "FullyConnected")
		return Architecture::FullyConnected;
	if (s == "resnet" || s == "ResidualMlp")
		return Architecture::ResidualMlp;
	throw std::invalid_argument("unknown architecture '" + std::string(s) + "'");
}

/// Head layout: rows [0, 9) are means, rows [9, 18) log-variances.
inline constexpr std::size_t kHeadOutputs = 2 * kFeatureCount;

struct NetConfig
{
	Architecture arch = Architecture::FullyConnected;
	/// Hidden layers (FullyConnected) or residual blocks (ResidualMlp).
	std::size_t depth = 12;
	std::size_t width = 100;
	double dropout_p = 0.1;
	std::size_t input_dim = kDefaultWindow * kFeatureCount;

	static NetConfig fully_connected(std::size_t input_dim)
	{
		return {Architecture::FullyConnected, 12, 100, 0.1, input_dim};
	}

	/// 15 blocks of two layers plus stem and head: 32 weight layers.
	static NetConfig residual(std::size_t input_dim) { return {Architecture::ResidualMlp, 15, 64, 0.1, input_dim}; }

	void validate() const
	{
		if (depth == 0 || width == 0 || input_dim == 0)
			throw NnError(NnError::Kind::InvalidConfig, "NetConfig: depth, width and input_dim must be positive");
		if (!(dropout_p >= 0.0 && dropout_p < 1.0))
			throw NnError(NnError::Kind::InvalidConfig, "NetConfig: dropout_p must lie in [0,1)");
	}

	nlohmann::json to_json() const
	{
		return {{"arch", std::string(to_string(arch))},
		        {"depth", depth},
		        {"width", width},
		        {"dropout_p", dropout_p},
		        {"input_dim", input_dim},
		        {"output_dim", kHeadOutputs}};
	}

	static NetConfig from_json(const nlohmann::json& j)
	{
		NetConfig c;
		c.arch = architecture_from_string(j.at("arch").get<std::string>());
		c.depth = j.at("depth").get<std::size_t>();
		c.width = j.at("width").get<std::size_t>();
		c.dropout_p = j.at("dropout_p").get<double>();
		c.input_dim = j.at("input_dim").get<std::size_t>();
		return c;
	}

	friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

enum class LossKind { Jsd, SquaredError };

struct TrainConfig
{
	double lr = 0.01;
	double momentum = 0.9;
	std::size_t batch_size = 32;
	std::size_t epochs = 100;
	std::uint64_t seed = 1;
	LossKind loss = LossKind::Jsd;
	std::size_t bins = kDefaultBins;

	void validate() const
	{
		if (!(lr > 0.0) || !(momentum >= 0.0 && momentum < 1.0) || batch_size == 0)
			throw NnError(NnError::Kind::InvalidConfig, "TrainConfig: need lr > 0, momentum in [0,1), batch_size >= 1");
	}
};

/// One training example: flattened window and the nine target distributions.
struct TrainingExample
{
	Eigen::VectorXd input;
	std::vector<GaussianPredictive> target;
};

enum class Mode { Train, Eval };

struct LayerShape
{
	std::size_t in = 0;
	std::size_t out = 0;
	std::size_t weight_offset = 0;
	std::size_t bias_offset = 0;
};

/// Per-sample grids for the JSD loss, one per output channel.
using GridSet = std::vector<std::array<Grid, kFeatureCount>>;

struct LossResult
{
	/// Mean over the batch of the per-sample loss (summed over channels).
	double loss = 0.0;
	/// Gradient of `loss` with respect to the parameter vector.
	Eigen::VectorXd grad;
};

/**
 * Network weights together with their configuration, seed and loss log.
 *
 * Parameters live in one flat vector; layer k's weight matrix is the
 * out x in column-major block at layers()[k].weight_offset.
 */
class TrainedNet
{
public:
	TrainedNet() = default;

	/// He-normal weights (variance 2 / fan_in), zero biases. The second
	/// layer of each residual branch is further scaled by 1/sqrt(blocks).
	static TrainedNet init(const NetConfig& config, std::uint64_t seed)
	{
		config.validate();
		TrainedNet net;
		net.config_ = config;
		net.seed_ = seed;
		net.build_layout();
		net.params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.param_count_));
		std::mt19937_64 rng(seed);
		std::normal_distribution<double> gauss(0.0, 1.0);
		for (std::size_t l = 0; l < net.layers_.size(); ++l) {
			const auto& s = net.layers_[l];
			double sd = std::sqrt(2.0 / static_cast<double>(s.in));
			if (config.arch == Architecture::ResidualMlp && l > 0 && l + 1 < net.layers_.size() && l % 2 == 0)
				sd /= std::sqrt(static_cast<double>(config.depth));
			for (std::size_t i = 0; i < s.in * s.out; ++i)
				net.params_[static_cast<Eigen::Index>(s.weight_offset + i)] = sd * gauss(rng);
		}
		return net;
	}

	const NetConfig& config() const noexcept { return config_; }
	std::uint64_t seed() const noexcept { return seed_; }
	const Eigen::VectorXd& params() const noexcept { return params_; }
	Eigen::VectorXd& params() noexcept { return params_; }
	const std::vector<LayerShape>& layers() const noexcept { return layers_; }
	const std::vector<double>& train_log() const noexcept { return train_log_; }
	std::vector<double>& train_log() noexcept { return train_log_; }

	Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const
	{
		const auto& s = layers_[l];
		return {params_.data() + s.weight_offset, static_cast<Eigen::Index>(s.out), static_cast<Eigen::Index>(s.in)};
	}

	Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const
	{
		const auto& s = layers_[l];
		return {params_.data() + s.bias_offset, static_cast<Eigen::Index>(s.out)};
	}

	Eigen::Map<Eigen::MatrixXd> weight(std::size_t l)
	{
		const auto& s = layers_[l];
		return {params_.data() + s.weight_offset, static_cast<Eigen::Index>(s.out), static_cast<Eigen::Index>(s.in)};
	}

	Eigen::Map<Eigen::VectorXd> bias(std::size_t l)
	{
		const auto& s = layers_[l];
		return {params_.data() + s.bias_offset, static_cast<Eigen::Index>(s.out)};
	}

	/// Intermediate values kept for backprop.
	struct Cache
	{
		Eigen::MatrixXd input;
		std::vector<Eigen::MatrixXd> pre;  // pre-activations of ReLU layers
		std::vector<Eigen::MatrixXd> mask; // dropout keep-masks (already scaled); empty in Eval
		std::vector<Eigen::MatrixXd> act;  // post-activation(+dropout) outputs
		std::vector<Eigen::MatrixXd> state; // residual stream entering each block (ResidualMlp)
	};

	/**
	 * Batched forward pass; inputs are columns of `x` (input_dim x batch).
	 * Returns the 18 x batch head output. Train mode draws inverted-dropout
	 * masks from `rng`.
	 */
	Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, Mode mode, std::mt19937_64* rng = nullptr,
	                              Cache* cache = nullptr) const
	{
		if (static_cast<std::size_t>(x.rows()) != config_.input_dim)
			throw NnError(NnError::Kind::DimensionMismatch,
			              "forward: input has dimension " + std::to_string(x.rows()) + ", net expects " +
			                  std::to_string(config_.input_dim));
		const bool dropout = mode == Mode::Train && config_.dropout_p > 0.0;
		if (dropout && rng == nullptr)
			throw std::invalid_argument("forward: Train mode with dropout needs an RNG");
		std::uniform_real_distribution<double> unit(0.0, 1.0);
		const double keep_scale = 1.0 / (1.0 - config_.dropout_p);

		auto relu_dropout = [&](Eigen::MatrixXd z) {
			Eigen::MatrixXd a = z.cwiseMax(0.0);
			Eigen::MatrixXd m;
			if (dropout) {
				m.resize(a.rows(), a.cols());
				for (Eigen::Index c = 0; c < m.cols(); ++c)
					for (Eigen::Index r = 0; r < m.rows(); ++r)
						m(r, c) = unit(*rng) < config_.dropout_p ? 0.0 : keep_scale;
				a.array() *= m.array();
			}
			if (cache) {
				cache->pre.push_back(std::move(z));
				cache->mask.push_back(std::move(m));
				cache->act.push_back(a);
			}
			return a;
		};

		if (cache) {
			*cache = Cache{};
			cache->input = x;
		}
		const std::size_t head = layers_.size() - 1;
		Eigen::MatrixXd h;
		if (config_.arch == Architecture::FullyConnected) {
			h = x;
			for (std::size_t l = 0; l < head; ++l)
				h = relu_dropout((weight(l) * h).colwise() + bias(l));
		} else {
			h = relu_dropout((weight(0) * x).colwise() + bias(0));
			for (std::size_t b = 0; b < config_.depth; ++b) {
				const std::size_t l1 = 1 + 2 * b;
				if (cache)
					cache->state.push_back(h);
				Eigen::MatrixXd branch = relu_dropout((weight(l1) * h).colwise() + bias(l1));
				h += (weight(l1 + 1) * branch).colwise() + bias(l1 + 1);
			}
			if (cache)
				cache->state.push_back(h);
		}
		return (weight(head) * h).colwise() + bias(head);
	}

	/// Gradient of sum_{r,c} grad_out(r,c) * out(r,c) with respect to the parameters.
	Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out) const
	{
		Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
		auto gw = [&](std::size_t l) {
			const auto& s = layers_[l];
			return Eigen::Map<Eigen::MatrixXd>(grad.data() + s.weight_offset, static_cast<Eigen::Index>(s.out),
			                                   static_cast<Eigen::Index>(s.in));
		};
		auto gb = [&](std::size_t l) {
			const auto& s = layers_[l];
			return Eigen::Map<Eigen::VectorXd>(grad.data() + s.bias_offset, static_cast<Eigen::Index>(s.out));
		};
		// gradient through ReLU + dropout for activation slot k
		auto through_act = [&](std::size_t k, Eigen::MatrixXd g) {
			if (cache.mask[k].size() > 0)
				g.array() *= cache.mask[k].array();
			g.array() *= (cache.pre[k].array() > 0.0).cast<double>();
			return g;
		};

		const std::size_t head = layers_.size() - 1;
		if (config_.arch == Architecture::FullyConnected) {
			const Eigen::MatrixXd& last = head == 0 ? cache.input : cache.act[head - 1];
			gw(head) = grad_out * last.transpose();
			gb(head) = grad_out.rowwise().sum();
			Eigen::MatrixXd g = weight(head).transpose() * grad_out;
			for (std::size_t l = head; l-- > 0;) {
				Eigen::MatrixXd gz = through_act(l, std::move(g));
				const Eigen::MatrixXd& prev = l == 0 ? cache.input : cache.act[l - 1];
				gw(l) = gz * prev.transpose();
				gb(l) = gz.rowwise().sum();
				if (l > 0)
					g = weight(l).transpose() * gz;
			}
		} else {
			const Eigen::MatrixXd& last = cache.state.back();
			gw(head) = grad_out * last.transpose();
			gb(head) = grad_out.rowwise().sum();
			Eigen::MatrixXd g = weight(head).transpose() * grad_out; // d/d residual stream
			for (std::size_t b = config_.depth; b-- > 0;) {
				const std::size_t l1 = 1 + 2 * b;
				const std::size_t slot = 1 + b; // activation slot of this block's branch
				gw(l1 + 1) = g * cache.act[slot].transpose();
				gb(l1 + 1) = g.rowwise().sum();
				Eigen::MatrixXd gz = through_act(slot, weight(l1 + 1).transpose() * g);
				gw(l1) = gz * cache.state[b].transpose();
				gb(l1) = gz.rowwise().sum();
				g += weight(l1).transpose() * gz;
			}
			Eigen::MatrixXd gz = through_act(0, std::move(g));
			gw(0) = gz * cache.input.transpose();
			gb(0) = gz.rowwise().sum();
		}
		return grad;
	}

	/// Single-window forward; variances are exp of the log-variance head.
	std::vector<GaussianPredictive> forward(const Eigen::VectorXd& x, Mode mode = Mode::Eval,
	                                        std::mt19937_64* rng = nullptr) const
	{
		return to_predictives(forward_batch(x, mode, rng), 0);
	}

	static std::vector<GaussianPredictive> to_predictives(const Eigen::MatrixXd& out, Eigen::Index col)
	{
		std::vector<GaussianPredictive> p(kFeatureCount);
		for (std::size_t f = 0; f < kFeatureCount; ++f) {
			p[f].mean = out(static_cast<Eigen::Index>(f), col);
			p[f].variance = std::exp(out(static_cast<Eigen::Index>(kFeatureCount + f), col));
		}
		return p;
	}

	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["format"] = "hapticgp-net";
		j["version"] = 1;
		j["config"] = config_.to_json();
		j["seed"] = seed_;
		j["weights"] = std::vector<double>(params_.data(), params_.data() + params_.size());
		j["train_log"] = train_log_;
		return j;
	}

	static TrainedNet from_json(const nlohmann::json& j)
	{
		if (j.value("format", "") != "hapticgp-net" || j.value("version", 0) != 1)
			throw NnError(NnError::Kind::Format, "not a hapticgp-net v1 document");
		TrainedNet net;
		net.config_ = NetConfig::from_json(j.at("config"));
		net.config_.validate();
		net.seed_ = j.at("seed").get<std::uint64_t>();
		net.build_layout();
		auto w = j.at("weights").get<std::vector<double>>();
		if (w.size() != net.param_count_)
			throw NnError(NnError::Kind::Format, "weight count does not match the configuration");
		net.params_ = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
		net.train_log_ = j.value("train_log", std::vector<double>{});
		return net;
	}

	friend bool operator==(const TrainedNet& a, const TrainedNet& b)
	{
		return a.config_ == b.config_ && a.seed_ == b.seed_ && a.params_ == b.params_ && a.train_log_ == b.train_log_;
	}

private:
	void build_layout()
	{
		layers_.clear();
		std::size_t off = 0;
		auto add = [&](std::size_t in, std::size_t out) {
			LayerShape s{in, out, off, off + in * out};
			off += in * out + out;
			layers_.push_back(s);
		};
		const auto w = config_.width;
		if (config_.arch == Architecture::FullyConnected) {
			add(config_.input_dim, w);
			for (std::size_t l = 1; l < config_.depth; ++l)
				add(w, w);
		} else {
			add(config_.input_dim, w);
			for (std::size_t b = 0; b < config_.depth; ++b) {
				add(w, w);
				add(w, w);
			}
		}
		add(w, kHeadOutputs);
		param_count_ = off;
	}

	NetConfig config_;
	std::uint64_t seed_ = 0;
	std::vector<LayerShape> layers_;
	std::size_t param_count_ = 0;
	Eigen::VectorXd params_;
	std::vector<double> train_log_;
};

/**
 * Loss on a head output batch and its gradient with respect to that output.
 *
 * Jsd: per sample, the sum over channels of the binned JSD between the
 * target Gaussian and the predicted one. Each channel's grid spans both
 * distributions; when `grids` is given it is used instead (and is how a
 * finite-difference check holds the binning fixed). Newly built grids are
 * appended to `grids_out` if supplied.
 *
 * SquaredError: sum over channels of (mean - target.mean)^2; the
 * log-variance outputs receive no gradient.
 */
inline double head_loss(const Eigen::MatrixXd& out, std::span<const TrainingExample* const> batch, LossKind kind,
                        std::size_t bins, Eigen::MatrixXd* grad_out, const GridSet* grids = nullptr,
                        GridSet* grids_out = nullptr)
{
	const auto n = static_cast<Eigen::Index>(batch.size());
	if (grad_out)
		*grad_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
	const double inv_n = 1.0 / static_cast<double>(n);
	double total = 0.0;
	for (Eigen::Index c = 0; c < n; ++c) {
		const auto& ex = *batch[static_cast<std::size_t>(c)];
		std::array<Grid, kFeatureCount> used{};
		for (std::size_t f = 0; f < kFeatureCount; ++f) {
			const auto fi = static_cast<Eigen::Index>(f);
			const double mu = out(fi, c);
			const double lv = out(fi + static_cast<Eigen::Index>(kFeatureCount), c);
			if (kind == LossKind::SquaredError) {
				const double d = mu - ex.target[f].mean;
				total += d * d;
				if (grad_out)
					(*grad_out)(fi, c) = 2.0 * d * inv_n;
				continue;
			}
			GaussianPredictive q{mu, std::exp(lv)};
			if (!std::isfinite(mu) || !std::isfinite(q.variance) || !(q.variance > 0.0)) {
				// Blown-up head: report a non-finite loss and let the caller decide.
				total = std::numeric_limits<double>::quiet_NaN();
				continue;
			}
			const Grid g = grids ? (*grids)[static_cast<std::size_t>(c)][f] : make_grid(ex.target[f], q, bins);
			used[f] = g;
			const auto p = discretize(ex.target[f], g, DistSource::Gp);
			const auto jg = jsd_grad(p, mu, lv, g);
			total += jg.value;
			if (grad_out) {
				(*grad_out)(fi, c) = jg.d_mean * inv_n;
				(*grad_out)(fi + static_cast<Eigen::Index>(kFeatureCount), c) = jg.d_log_variance * inv_n;
			}
		}
		if (grids_out && kind == LossKind::Jsd)
			grids_out->push_back(used);
	}
	return total * inv_n;
}

namespace detail {

inline Eigen::MatrixXd stack_inputs(std::span<const TrainingExample* const> batch, std::size_t dim)
{
	Eigen::MatrixXd x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(batch.size()));
	for (std::size_t c = 0; c < batch.size(); ++c) {
		if (static_cast<std::size_t>(batch[c]->input.size()) != dim)
			throw NnError(NnError::Kind::DimensionMismatch, "training example has the wrong input dimension");
		if (batch[c]->target.size() != kFeatureCount)
			throw NnError(NnError::Kind::DimensionMismatch, "training example needs nine targets");
		x.col(static_cast<Eigen::Index>(c)) = batch[c]->input;
	}
	return x;
}

inline std::vector<const TrainingExample*> pointers(std::span<const TrainingExample> data)
{
	std::vector<const TrainingExample*> out;
	out.reserve(data.size());
	for (const auto& e : data)
		out.push_back(&e);
	return out;
}

} // namespace detail

/// Eval-mode mean loss and its parameter gradient over `data`.
inline LossResult loss_and_gradient(const TrainedNet& net, std::span<const TrainingExample> data, LossKind kind,
                                    std::size_t bins = kDefaultBins, const GridSet* grids = nullptr,
                                    GridSet* grids_out = nullptr)
{
	auto ptrs = detail::pointers(data);
	const Eigen::MatrixXd x = detail::stack_inputs(ptrs, net.config().input_dim);
	TrainedNet::Cache cache;
	const Eigen::MatrixXd out = net.forward_batch(x, Mode::Eval, nullptr, &cache);
	Eigen::MatrixXd gout;
	LossResult r;
	r.loss = head_loss(out, ptrs, kind, bins, &gout, grids, grids_out);
	r.grad = net.backward(cache, gout);
	return r;
}

/// Eval-mode mean loss over `data` (JSD: summed over the nine channels).
inline double mean_loss(const TrainedNet& net, std::span<const TrainingExample> data, LossKind kind = LossKind::Jsd,
                        std::size_t bins = kDefaultBins)
{
	if (data.empty())
		return 0.0;
	auto ptrs = detail::pointers(data);
	const Eigen::MatrixXd out = net.forward_batch(detail::stack_inputs(ptrs, net.config().input_dim), Mode::Eval);
	return head_loss(out, ptrs, kind, bins, nullptr);
}

/// Called after each epoch with (epoch index, mean loss); return false to stop early.
using EpochCallback = std::function<bool(std::size_t, double)>;

/**
 * Minibatch SGD with classical momentum: v <- m v - lr g; w <- w + v.
 *
 * The logged loss of an epoch is the mean over its samples of the
 * Train-mode loss seen during the updates. A non-finite loss or parameter
 * aborts with DivergentTraining carrying the epoch index.
 */
inline TrainedNet train(TrainedNet net, std::span<const TrainingExample> data, const TrainConfig& tc,
                        const EpochCallback& on_epoch = {})
{
	tc.validate();
	if (data.empty())
		throw NnError(NnError::Kind::InvalidConfig, "train: empty dataset");
	for (const auto& ex : data)
		for (const auto& t : ex.target)
			if (!std::isfinite(t.mean) || !std::isfinite(t.variance) || t.variance < 0.0)
				throw NnError(NnError::Kind::InvalidConfig, "train: non-finite target distribution");

	std::mt19937_64 rng(tc.seed);
	std::vector<std::size_t> order(data.size());
	std::iota(order.begin(), order.end(), 0);
	Eigen::VectorXd velocity = Eigen::VectorXd::Zero(net.params().size());
	std::vector<const TrainingExample*> batch;
	TrainedNet::Cache cache;
	Eigen::MatrixXd gout;

	for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
		std::shuffle(order.begin(), order.end(), rng);
		double epoch_loss = 0.0;
		for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
			const std::size_t stop = std::min(order.size(), start + tc.batch_size);
			batch.clear();
			for (std::size_t i = start; i < stop; ++i)
				batch.push_back(&data[order[i]]);
			const Eigen::MatrixXd x = detail::stack_inputs(batch, net.config().input_dim);
			const Eigen::MatrixXd out = net.forward_batch(x, Mode::Train, &rng, &cache);
			const double loss = head_loss(out, batch, tc.loss, tc.bins, &gout);
			if (!std::isfinite(loss))
				throw NnError(NnError::Kind::DivergentTraining,
				              "training diverged (non-finite loss) in epoch " + std::to_string(epoch),
				              static_cast<int>(epoch));
			epoch_loss += loss * static_cast<double>(batch.size());
			const Eigen::VectorXd grad = net.backward(cache, gout);
			velocity = tc.momentum * velocity - tc.lr * grad;
			net.params() += velocity;
		}
		epoch_loss /= static_cast<double>(order.size());
		if (!std::isfinite(epoch_loss) || !net.params().allFinite())
			throw NnError(NnError::Kind::DivergentTraining,
			              "training diverged (non-finite parameters) in epoch " + std::to_string(epoch),
			              static_cast<int>(epoch));
		net.train_log().push_back(epoch_loss);
		if (on_epoch && !on_epoch(epoch, epoch_loss))
			break;
	}
	return net;
}

/// CSV loss log with a schema line: `epoch,mean_jsd`.
inline void write_loss_log(std::ostream& out, const TrainedNet& net, std::string_view column = "mean_jsd")
{
	out << "# hapticgp-losslog v1\n";
	out << "epoch," << column << '\n';
	for (std::size_t e = 0; e < net.train_log().size(); ++e)
		out << e << ',' << detail::format_double(net.train_log()[e]) << '\n';
}

} // namespace hapticgp

#endif // HAPTICGP_NN_HPP
