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
 * \file hapticgp/shapley.hpp
 *
 * \brief Shapley feature values: a memoized characteristic function over
 *  feature subsets, exact enumeration, permutation sampling, an axiom
 *  checker, and top-k selection. The feature-value game scores GP
 *  predictors refit on each subset.
 */

#ifndef HAPTICGP_SHAPLEY_HPP
#define HAPTICGP_SHAPLEY_HPP

#include <hapticgp/core.hpp>
#include <hapticgp/gp.hpp>
#include <hapticgp/ingest.hpp>
#include <hapticgp/metrics.hpp>

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace hapticgp {

class ShapleyError : public Error
{
public:
	enum class Kind { TooManyFeatures, EvaluatorFailure, InsufficientData };

	ShapleyError(Kind kind, const std::string& message, std::optional<FeatureSubset::mask_type> mask = std::nullopt)
	: Error(message), kind_(kind), mask_(mask)
	{
	}

	Kind kind() const noexcept { return kind_; }
	/// Failing subset for EvaluatorFailure.
	std::optional<FeatureSubset::mask_type> mask() const noexcept { return mask_; }

private:
	Kind kind_;
	std::optional<FeatureSubset::mask_type> mask_;
};

inline constexpr std::size_t kMaxExactFeatures = 20;

/**
 * V(S) over subsets of M features, memoized.
 *
 * Each subset is evaluated at most once even under concurrent access: the
 * first caller evaluates while later callers wait on its result. A throwing
 * evaluator or a non-finite value becomes EvaluatorFailure for that subset.
 */
class CharacteristicFn
{
public:
	using Evaluator = std::function<double(const FeatureSubset&)>;

	CharacteristicFn(std::size_t features, Evaluator evaluator)
	: features_(features), evaluator_(std::move(evaluator)), state_(std::make_shared<State>())
	{
		if (features > 32)
			throw ShapleyError(ShapleyError::Kind::TooManyFeatures, "at most 32 features are supported");
	}

	std::size_t features() const noexcept { return features_; }

	double operator()(const FeatureSubset& s) const { return value(s.mask()); }

	double value(FeatureSubset::mask_type mask) const
	{
		std::shared_future<double> fut;
		std::promise<double> mine;
		bool owner = false;
		{
			std::lock_guard lock(state_->mutex);
			auto it = state_->cache.find(mask);
			if (it != state_->cache.end()) {
				fut = it->second;
			} else {
				fut = mine.get_future().share();
				state_->cache.emplace(mask, fut);
				++state_->evaluations;
				owner = true;
			}
		}
		if (owner) {
			try {
				const double v = evaluator_(FeatureSubset(mask, features_));
				if (!std::isfinite(v))
					throw ShapleyError(ShapleyError::Kind::EvaluatorFailure,
					                   "evaluator returned a non-finite value for mask " + std::to_string(mask), mask);
				mine.set_value(v);
			} catch (const ShapleyError&) {
				mine.set_exception(std::current_exception());
			} catch (const std::exception& e) {
				mine.set_exception(std::make_exception_ptr(ShapleyError(
				    ShapleyError::Kind::EvaluatorFailure,
				    "evaluator failed for mask " + std::to_string(mask) + ": " + e.what(), mask)));
			}
		}
		return fut.get();
	}

	double v_empty() const { return value(0); }
	double v_full() const { return value(FeatureSubset::all(features_).mask()); }

	/// Number of distinct subsets evaluated so far.
	std::size_t evaluations() const
	{
		std::lock_guard lock(state_->mutex);
		return state_->evaluations;
	}

	/// Evaluates the given masks, spreading them over `threads` workers.
	void prefetch(const std::vector<FeatureSubset::mask_type>& masks, std::size_t threads = 1) const
	{
		if (threads <= 1 || masks.size() < 2) {
			for (auto m : masks)
				value(m);
			return;
		}
		std::atomic<std::size_t> next{0};
		std::vector<std::future<void>> workers;
		for (std::size_t t = 0; t < threads; ++t)
			workers.push_back(std::async(std::launch::async, [&] {
				for (std::size_t i = next++; i < masks.size(); i = next++)
					value(masks[i]);
			}));
		for (auto& w : workers)
			w.get();
	}

private:
	struct State
	{
		mutable std::mutex mutex;
		std::unordered_map<FeatureSubset::mask_type, std::shared_future<double>> cache;
		std::size_t evaluations = 0;
	};

	std::size_t features_;
	Evaluator evaluator_;
	std::shared_ptr<State> state_;
};

enum class ShapleyMethod { Exact, Sampled };

struct ShapleyReport
{
	std::vector<double> phi;
	ShapleyMethod method = ShapleyMethod::Exact;
	std::size_t n_perms = 0;
	std::uint64_t seed = 0;
	double v_full = 0.0;
	double v_empty = 0.0;
	std::vector<double> stderr_; ///< Sampled only
	std::size_t evaluations = 0;

	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["format"] = "hapticgp-shapley";
		j["version"] = 1;
		j["phi"] = phi;
		j["method"] = method == ShapleyMethod::Exact ? "exact" : "sampled";
		if (method == ShapleyMethod::Sampled) {
			j["n_perms"] = n_perms;
			j["seed"] = seed;
			j["stderr"] = stderr_;
		}
		j["v_full"] = v_full;
		j["v_empty"] = v_empty;
		j["evaluations"] = evaluations;
		return j;
	}

	static ShapleyReport from_json(const nlohmann::json& j)
	{
		ShapleyReport r;
		r.phi = j.at("phi").get<std::vector<double>>();
		r.method = j.at("method").get<std::string>() == "exact" ? ShapleyMethod::Exact : ShapleyMethod::Sampled;
		if (r.method == ShapleyMethod::Sampled) {
			r.n_perms = j.at("n_perms").get<std::size_t>();
			r.seed = j.at("seed").get<std::uint64_t>();
			r.stderr_ = j.at("stderr").get<std::vector<double>>();
		}
		r.v_full = j.at("v_full").get<double>();
		r.v_empty = j.at("v_empty").get<double>();
		r.evaluations = j.value("evaluations", std::size_t{0});
		return r;
	}
};

namespace detail {

/// |S|! (M - |S| - 1)! / M! for |S| = 0 .. M-1, via 1 / (M C(M-1, s)).
inline std::vector<double> shapley_weights(std::size_t m)
{
	std::vector<double> w(m);
	double binom = 1.0; // C(m-1, s)
	for (std::size_t s = 0; s < m; ++s) {
		w[s] = 1.0 / (static_cast<double>(m) * binom);
		binom = binom * static_cast<double>(m - 1 - s) / static_cast<double>(s + 1);
	}
	return w;
}

} // namespace detail

/**
 * phi_a = sum over S not containing a of |S|!(M-|S|-1)!/M! [V(S+a) - V(S)].
 *
 * All 2^M subsets are evaluated once (optionally in parallel) and then
 * combined.
 */
inline ShapleyReport shapley_exact(const CharacteristicFn& v, std::size_t threads = 1)
{
	const std::size_t m = v.features();
	if (m > kMaxExactFeatures)
		throw ShapleyError(ShapleyError::Kind::TooManyFeatures,
		                   "exact Shapley values need M <= " + std::to_string(kMaxExactFeatures) + ", got " +
		                       std::to_string(m));
	const FeatureSubset::mask_type count = FeatureSubset::mask_type{1} << m;
	std::vector<FeatureSubset::mask_type> masks(count);
	std::iota(masks.begin(), masks.end(), FeatureSubset::mask_type{0});
	v.prefetch(masks, threads);
	std::vector<double> values(count);
	for (FeatureSubset::mask_type s = 0; s < count; ++s)
		values[s] = v.value(s);

	const auto w = detail::shapley_weights(m);
	ShapleyReport r;
	r.phi.assign(m, 0.0);
	for (FeatureSubset::mask_type s = 0; s < count; ++s) {
		const auto size = static_cast<std::size_t>(std::popcount(s));
		for (std::size_t a = 0; a < m; ++a) {
			const auto bit = FeatureSubset::mask_type{1} << a;
			if (s & bit)
				continue;
			r.phi[a] += w[size] * (values[s | bit] - values[s]);
		}
	}
	r.method = ShapleyMethod::Exact;
	r.v_full = values[count - 1];
	r.v_empty = values[0];
	r.evaluations = v.evaluations();
	return r;
}

/**
 * Permutation estimator: average of each feature's marginal contribution
 * along `n_perms` uniformly random orderings. stderr is the sample standard
 * deviation of those marginals over sqrt(n_perms) (0 when n_perms == 1).
 */
inline ShapleyReport shapley_sampled(const CharacteristicFn& v, std::size_t n_perms, std::uint64_t seed)
{
	if (n_perms == 0)
		throw std::invalid_argument("shapley_sampled: n_perms must be positive");
	const std::size_t m = v.features();
	std::mt19937_64 rng(seed);
	std::vector<std::size_t> perm(m);
	std::iota(perm.begin(), perm.end(), 0);
	std::vector<double> mean(m, 0.0), m2(m, 0.0);
	const double v0 = v.value(0);
	for (std::size_t k = 0; k < n_perms; ++k) {
		std::shuffle(perm.begin(), perm.end(), rng);
		FeatureSubset::mask_type s = 0;
		double prev = v0;
		for (auto a : perm) {
			s |= FeatureSubset::mask_type{1} << a;
			const double cur = v.value(s);
			const double x = cur - prev;
			// Welford
			const double delta = x - mean[a];
			mean[a] += delta / static_cast<double>(k + 1);
			m2[a] += delta * (x - mean[a]);
			prev = cur;
		}
	}
	ShapleyReport r;
	r.method = ShapleyMethod::Sampled;
	r.n_perms = n_perms;
	r.seed = seed;
	r.phi = mean;
	r.stderr_.assign(m, 0.0);
	if (n_perms > 1)
		for (std::size_t a = 0; a < m; ++a)
			r.stderr_[a] = std::sqrt(m2[a] / static_cast<double>(n_perms - 1) / static_cast<double>(n_perms));
	r.v_empty = v0;
	r.v_full = v.value(FeatureSubset::all(m).mask());
	r.evaluations = v.evaluations();
	return r;
}

/// Tolerances used by axiom_suite.
struct AxiomTolerances
{
	double transferability = 1e-10;
	double null_player = 1e-12;
	double symmetry = 1e-12;
	double linearity = 1e-10;
	double monotonicity = 1e-12;
	/// Marginals below this count as zero/identical when detecting null or symmetric players.
	double premise = 1e-14;
};

struct AxiomVerdict
{
	bool transferability = true;
	bool null_player = true;
	bool symmetry = true;
	bool linearity = true;
	bool monotonicity = true;
	std::vector<std::string> failures;

	bool ok() const { return failures.empty(); }
};

/**
 * Monotonicity premise and conclusion for feature a: if V1's marginal for a
 * is >= V2's on every subset, phi_a(V1) >= phi_a(V2) - tol must hold.
 * Returns nullopt when the premise does not hold.
 */
inline std::optional<bool> monotonicity_holds(const CharacteristicFn& v1, const CharacteristicFn& v2,
                                              const std::vector<double>& phi1, const std::vector<double>& phi2,
                                              std::size_t a, double tol = 1e-12)
{
	const std::size_t m = v1.features();
	const auto bit = FeatureSubset::mask_type{1} << a;
	for (FeatureSubset::mask_type s = 0; s < (FeatureSubset::mask_type{1} << m); ++s) {
		if (s & bit)
			continue;
		if (v1.value(s | bit) - v1.value(s) < v2.value(s | bit) - v2.value(s))
			return std::nullopt;
	}
	return phi1[a] >= phi2[a] - tol;
}

/**
 * Checks an exact report against the Shapley axioms on game `v`:
 * transferability (sum phi = V(Z) - V(empty)), null player, symmetry,
 * linearity against `other` (phi(v + other) = phi(v) + phi(other)) and
 * monotonicity for every feature whose marginals dominate between v and
 * `other` in either direction. Without `other`, a seeded random game is used.
 */
inline AxiomVerdict axiom_suite(const CharacteristicFn& v, const ShapleyReport& report,
                                const CharacteristicFn* other = nullptr, const AxiomTolerances& tol = {})
{
	if (report.method != ShapleyMethod::Exact)
		throw std::invalid_argument("axiom_suite: needs an exact report");
	const std::size_t m = v.features();
	if (report.phi.size() != m)
		throw std::invalid_argument("axiom_suite: report size does not match the game");
	AxiomVerdict verdict;
	const FeatureSubset::mask_type count = FeatureSubset::mask_type{1} << m;

	const double total = std::accumulate(report.phi.begin(), report.phi.end(), 0.0);
	const double target = v.v_full() - v.v_empty();
	if (!(std::abs(total - target) <= tol.transferability)) {
		verdict.transferability = false;
		verdict.failures.push_back("transferability: sum phi = " + std::to_string(total) +
		                           ", V(Z) - V(0) = " + std::to_string(target));
	}

	for (std::size_t a = 0; a < m; ++a) {
		const auto bit = FeatureSubset::mask_type{1} << a;
		bool is_null = true;
		for (FeatureSubset::mask_type s = 0; s < count && is_null; ++s)
			if (!(s & bit) && std::abs(v.value(s | bit) - v.value(s)) > tol.premise)
				is_null = false;
		if (is_null && !(std::abs(report.phi[a]) <= tol.null_player)) {
			verdict.null_player = false;
			verdict.failures.push_back("null player: feature " + std::to_string(a) + " has phi " +
			                           std::to_string(report.phi[a]));
		}
	}

	for (std::size_t a = 0; a < m; ++a)
		for (std::size_t b = a + 1; b < m; ++b) {
			const auto ba = FeatureSubset::mask_type{1} << a;
			const auto bb = FeatureSubset::mask_type{1} << b;
			bool same = true;
			for (FeatureSubset::mask_type s = 0; s < count && same; ++s)
				if (!(s & ba) && !(s & bb) && std::abs(v.value(s | ba) - v.value(s | bb)) > tol.premise)
					same = false;
			if (same && !(std::abs(report.phi[a] - report.phi[b]) <= tol.symmetry)) {
				verdict.symmetry = false;
				verdict.failures.push_back("symmetry: features " + std::to_string(a) + " and " + std::to_string(b));
			}
		}

	std::optional<CharacteristicFn> random_game;
	if (!other) {
		std::vector<double> table(count);
		std::mt19937_64 rng(0xC0FFEEULL + m);
		std::uniform_real_distribution<double> u(-1.0, 1.0);
		for (auto& x : table)
			x = u(rng);
		random_game.emplace(m, [table](const FeatureSubset& s) { return table[s.mask()]; });
		other = &*random_game;
	}
	if (other->features() != m)
		throw std::invalid_argument("axiom_suite: second game has a different feature count");
	const auto phi_other = shapley_exact(*other).phi;
	CharacteristicFn sum(m, [&v, other](const FeatureSubset& s) { return v(s) + (*other)(s); });
	const auto phi_sum = shapley_exact(sum).phi;
	for (std::size_t a = 0; a < m; ++a)
		if (!(std::abs(phi_sum[a] - (report.phi[a] + phi_other[a])) <= tol.linearity)) {
			verdict.linearity = false;
			verdict.failures.push_back("linearity: feature " + std::to_string(a));
		}

	for (std::size_t a = 0; a < m; ++a) {
		for (int dir = 0; dir < 2; ++dir) {
			auto res = dir == 0 ? monotonicity_holds(v, *other, report.phi, phi_other, a, tol.monotonicity)
			                    : monotonicity_holds(*other, v, phi_other, report.phi, a, tol.monotonicity);
			if (res && !*res) {
				verdict.monotonicity = false;
				verdict.failures.push_back("monotonicity: feature " + std::to_string(a));
			}
		}
	}
	return verdict;
}

/**
 * The k features with the largest phi; ties go to the lower index.
 */
inline FeatureSubset select_top_k(const ShapleyReport& report, std::size_t k)
{
	const std::size_t m = report.phi.size();
	if (k < 1 || k > m)
		throw std::invalid_argument("select_top_k: k must lie in [1, M]");
	std::vector<std::size_t> idx(m);
	std::iota(idx.begin(), idx.end(), 0);
	std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return report.phi[a] > report.phi[b]; });
	idx.resize(k);
	return FeatureSubset::of(idx, m);
}

// ---------------------------------------------------------------------------
// Feature-value game on haptic data

/**
 * Aligned input and target channel series, both standardized.
 *
 * Row t of `inputs` holds the M candidate input channels at sample t, row t
 * of `targets` the nine channels to predict. Regression pairs use input
 * rows [t - window, t) to predict target row t.
 */
struct FeatureDataset
{
	Eigen::MatrixXd inputs;
	Eigen::MatrixXd targets;
	Normalization target_norm;
	std::size_t window = kDefaultWindow;
	double train_fraction = 0.7;
	std::vector<std::string> input_names;

	std::size_t features() const { return static_cast<std::size_t>(inputs.cols()); }
	std::size_t pair_count() const
	{
		return static_cast<std::size_t>(targets.rows()) > window ? static_cast<std::size_t>(targets.rows()) - window : 0;
	}
	std::size_t train_pairs() const
	{
		return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(pair_count())));
	}

	/// Encoded input for the pair whose target row is `t`.
	Eigen::VectorXd encode(std::size_t t, const FeatureSubset& subset) const
	{
		return encode_window(inputs.middleRows(static_cast<Eigen::Index>(t - window), static_cast<Eigen::Index>(window)),
		                     subset);
	}

	/// Inputs and targets are the same nine channels of one normalized trace.
	static FeatureDataset same_side(const Trace& normalized, std::size_t window = kDefaultWindow)
	{
		FeatureDataset d;
		d.inputs = normalized.matrix();
		d.targets = d.inputs;
		d.target_norm = normalized.norm();
		d.window = window;
		for (auto n : kFeatureNames)
			d.input_names.emplace_back(n);
		return d;
	}

	/// Eighteen inputs (own side then other side), nine own-side targets; paired by index.
	static FeatureDataset cross_side(const Trace& own, const Trace& other, std::size_t window = kDefaultWindow)
	{
		const auto n = static_cast<Eigen::Index>(std::min(own.size(), other.size()));
		FeatureDataset d;
		d.targets = own.matrix().topRows(n);
		d.inputs.resize(n, 2 * static_cast<Eigen::Index>(kFeatureCount));
		d.inputs << d.targets, other.matrix().topRows(n);
		d.target_norm = own.norm();
		d.window = window;
		for (auto side : {own.side(), other.side()})
			for (auto name : kFeatureNames)
				d.input_names.push_back(std::string(to_string(side)).substr(0, 1) + "." + std::string(name));
		return d;
	}
};

/// Cost knobs of the feature-value game.
struct EvaluatorBudget
{
	/// Training pairs per GP fit (evenly strided subsample of the train split).
	std::size_t max_train_pairs = 80;
	/// Validation pairs scored per subset (evenly strided subsample).
	std::size_t max_validation_pairs = 120;
	/// Hyperparameter optimizer evaluations per fit; 0 keeps the default start.
	int optimizer_evaluations = 0;
	std::size_t threads = 1;
};

namespace detail {

inline std::vector<std::size_t> strided(std::size_t first, std::size_t count, std::size_t max_take)
{
	std::vector<std::size_t> out;
	if (count == 0)
		return out;
	const std::size_t take = std::min(count, std::max<std::size_t>(max_take, 1));
	out.reserve(take);
	for (std::size_t i = 0; i < take; ++i)
		out.push_back(first + (i * count) / take);
	return out;
}

/// Mean over channels of the range-normalized accuracy of `pred` (normalized units) vs truth, in raw units.
inline double mean_channel_accuracy(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, const Normalization& norm)
{
	double acc = 0.0;
	std::vector<double> p(static_cast<std::size_t>(pred.rows())), t(p.size());
	for (Eigen::Index c = 0; c < truth.cols(); ++c) {
		const auto k = static_cast<std::size_t>(c);
		for (Eigen::Index r = 0; r < truth.rows(); ++r) {
			p[static_cast<std::size_t>(r)] = norm.to_raw(k, pred(r, c));
			t[static_cast<std::size_t>(r)] = norm.to_raw(k, truth(r, c));
		}
		acc += accuracy_percent(p, t);
	}
	return acc / static_cast<double>(truth.cols());
}

} // namespace detail

/**
 * V(S): mean validation accuracy over the nine target channels of GPs fit
 * on the train split using only the channels in S as inputs. V(empty) is the
 * accuracy of predicting the (zero) prior mean.
 */
inline CharacteristicFn make_feature_value_fn(const FeatureDataset& data, const EvaluatorBudget& budget = {})
{
	if (data.features() == 0 || data.features() > 18)
		throw ShapleyError(ShapleyError::Kind::InsufficientData, "feature dataset needs 1..18 input channels");
	const std::size_t pairs = data.pair_count();
	const std::size_t n_train = data.train_pairs();
	if (n_train < 2 || pairs - n_train < 2)
		throw ShapleyError(ShapleyError::Kind::InsufficientData,
		                   "feature dataset too short for a train/validation split (" + std::to_string(pairs) + " pairs)");
	const auto train_idx = detail::strided(data.window, n_train, budget.max_train_pairs);
	const auto val_idx = detail::strided(data.window + n_train, pairs - n_train, budget.max_validation_pairs);

	auto shared = std::make_shared<const FeatureDataset>(data);
	Eigen::MatrixXd y_train(static_cast<Eigen::Index>(train_idx.size()), shared->targets.cols());
	for (std::size_t i = 0; i < train_idx.size(); ++i)
		y_train.row(static_cast<Eigen::Index>(i)) = shared->targets.row(static_cast<Eigen::Index>(train_idx[i]));
	Eigen::MatrixXd y_val(static_cast<Eigen::Index>(val_idx.size()), shared->targets.cols());
	for (std::size_t i = 0; i < val_idx.size(); ++i)
		y_val.row(static_cast<Eigen::Index>(i)) = shared->targets.row(static_cast<Eigen::Index>(val_idx[i]));

	auto eval = [shared, train_idx, val_idx, y_train, y_val, budget](const FeatureSubset& s) -> double {
		Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(y_val.rows(), y_val.cols());
		if (!s.empty()) {
			const auto d = static_cast<Eigen::Index>(shared->window * s.size());
			Eigen::MatrixXd x(static_cast<Eigen::Index>(train_idx.size()), d);
			for (std::size_t i = 0; i < train_idx.size(); ++i)
				x.row(static_cast<Eigen::Index>(i)) = shared->encode(train_idx[i], s).transpose();
			GpFitOptions opts;
			opts.optimize = budget.optimizer_evaluations > 0;
			opts.max_evaluations = budget.optimizer_evaluations;
			const auto gp = MultiOutputGp::fit(x, y_train, default_hyperparameters(d), opts);
			for (std::size_t i = 0; i < val_idx.size(); ++i) {
				const Eigen::VectorXd xi = shared->encode(val_idx[i], s);
				for (std::size_t f = 0; f < gp.outputs(); ++f)
					pred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = gp[f].predict(xi).mean;
			}
		}
		return detail::mean_channel_accuracy(pred, y_val, shared->target_norm);
	};
	return CharacteristicFn(data.features(), eval);
}

} // namespace hapticgp

#endif // HAPTICGP_SHAPLEY_HPP
