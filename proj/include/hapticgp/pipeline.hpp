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
 * \file hapticgp/pipeline.hpp
 *
 * \brief Inference episodes: iterative one-step prediction in blocks of
 *  ten with self-feeding, a GP refit at every block boundary on delivered
 *  true samples (or the predictions where nothing arrived), and per-sample
 *  records for scoring.
 */

#ifndef HAPTICGP_PIPELINE_HPP
#define HAPTICGP_PIPELINE_HPP

#include <hapticgp/core.hpp>
#include <hapticgp/divergence.hpp>
#include <hapticgp/gp.hpp>
#include <hapticgp/ingest.hpp>
#include <hapticgp/nn.hpp>

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace hapticgp {

class PipelineError : public Error
{
public:
	enum class Kind { TooShort, PredictorFailure, InvalidArrivals };

	PipelineError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

	Kind kind() const noexcept { return kind_; }

private:
	Kind kind_;
};

/// Delivery of the true sample with a given index; no payload means it never arrives.
struct ArrivalEvent
{
	std::int64_t index = 0;
	std::optional<SignalSample> payload;
	/// Samples late; the sample becomes usable at time index + delay.
	std::int64_t delay = 0;

	bool missing() const { return !payload.has_value(); }
};

/// How true samples from the other side reach the predictor.
struct LossModel
{
	enum class Kind { None, DropAll, IidDrop, Burst, FixedDelay };

	Kind kind = Kind::None;
	double drop_probability = 0.0; // IidDrop
	std::size_t burst_length = 0;  // Burst: samples lost per burst
	std::size_t burst_gap = 0;     // Burst: delivered samples between bursts
	std::int64_t delay = 0;        // FixedDelay

	static LossModel none() { return {}; }
	static LossModel drop_all() { return {Kind::DropAll}; }
	static LossModel iid_drop(double p) { return {Kind::IidDrop, p}; }
	static LossModel burst(std::size_t length, std::size_t gap) { return {Kind::Burst, 0.0, length, gap}; }
	static LossModel fixed_delay(std::int64_t d) { return {Kind::FixedDelay, 0.0, 0, 0, d}; }

	/// none | drop-all | iid-drop:P | burst:LEN:GAP | fixed-delay:D
	static LossModel parse(const std::string& text)
	{
		auto parts = detail::split(text, ':');
		const auto& head = parts[0];
		auto num = [&](std::size_t i) {
			if (i >= parts.size())
				throw std::invalid_argument("loss model '" + text + "' is missing a parameter");
			auto v = detail::parse_double(parts[i]);
			if (!v)
				throw std::invalid_argument("loss model '" + text + "' has a bad parameter");
			return *v;
		};
		if (head == "none")
			return none();
		if (head == "drop-all")
			return drop_all();
		if (head == "iid-drop")
			return iid_drop(num(1));
		if (head == "burst")
			return burst(static_cast<std::size_t>(num(1)), static_cast<std::size_t>(num(2)));
		if (head == "fixed-delay")
			return fixed_delay(static_cast<std::int64_t>(num(1)));
		throw std::invalid_argument("unknown loss model '" + text + "'");
	}

	std::string to_string() const
	{
		switch (kind) {
		case Kind::None: return "none";
		case Kind::DropAll: return "drop-all";
		case Kind::IidDrop: return "iid-drop:" + detail::format_double(drop_probability);
		case Kind::Burst: return "burst:" + std::to_string(burst_length) + ":" + std::to_string(burst_gap);
		case Kind::FixedDelay: return "fixed-delay:" + std::to_string(delay);
		}
		return "none";
	}
};

/// One arrival event per sample after the first `skip` samples.
inline std::vector<ArrivalEvent> make_arrivals(const Trace& trace, const LossModel& model, std::uint64_t seed,
                                               std::size_t skip = 0)
{
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> unit(0.0, 1.0);
	std::vector<ArrivalEvent> out;
	for (std::size_t i = skip; i < trace.size(); ++i) {
		ArrivalEvent e;
		e.index = trace[i].t;
		bool deliver = true;
		switch (model.kind) {
		case LossModel::Kind::None: break;
		case LossModel::Kind::DropAll: deliver = false; break;
		case LossModel::Kind::IidDrop: deliver = unit(rng) >= model.drop_probability; break;
		case LossModel::Kind::Burst: {
			const std::size_t period = model.burst_length + model.burst_gap;
			deliver = period == 0 || (i - skip) % period < model.burst_gap;
			break;
		}
		case LossModel::Kind::FixedDelay: e.delay = model.delay; break;
		}
		if (deliver)
			e.payload = trace[i];
		out.push_back(std::move(e));
	}
	return out;
}

/// Lag window (window x 9, normalized) and the sample that follows it.
struct RegressionPair
{
	Eigen::MatrixXd window;
	FeatureVector next{};
};

/// All (window, next) pairs of a normalized trace.
inline std::vector<RegressionPair> regression_pairs(const Trace& trace, std::size_t window = kDefaultWindow)
{
	std::vector<RegressionPair> out;
	if (trace.size() <= window)
		return out;
	for (std::size_t t = window; t < trace.size(); ++t) {
		RegressionPair p;
		p.window = window_at(trace, t - window, window).values;
		p.next = trace[t].values;
		out.push_back(std::move(p));
	}
	return out;
}

/// Fits one GP per channel on the last `capacity` pairs, inputs restricted to `subset`.
inline MultiOutputGp fit_oracle(const std::vector<RegressionPair>& pairs, const FeatureSubset& subset,
                                const std::vector<GpHyperparameters>& init, const GpFitOptions& opts,
                                std::size_t capacity = 0)
{
	if (pairs.empty())
		throw PipelineError(PipelineError::Kind::TooShort, "no regression pairs to fit the oracle");
	const std::size_t first = capacity > 0 && pairs.size() > capacity ? pairs.size() - capacity : 0;
	const auto n = static_cast<Eigen::Index>(pairs.size() - first);
	const auto d = pairs[first].window.rows() * static_cast<Eigen::Index>(subset.size());
	Eigen::MatrixXd x(n, d);
	Eigen::MatrixXd y(n, static_cast<Eigen::Index>(kFeatureCount));
	for (Eigen::Index i = 0; i < n; ++i) {
		const auto& p = pairs[first + static_cast<std::size_t>(i)];
		x.row(i) = encode_window(p.window, subset).transpose();
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			y(i, static_cast<Eigen::Index>(k)) = p.next[k];
	}
	if (init.empty())
		return MultiOutputGp::fit(x, y, default_hyperparameters(d), opts);
	return MultiOutputGp::fit(x, y, init, opts);
}

/// Predict with the episode's current GP.
struct GpPredictor
{
};

/// Predict with a trained network; the GP keeps running as the reference.
struct NnPredictor
{
	const TrainedNet* net = nullptr;
};

using Predictor = std::variant<GpPredictor, NnPredictor>;

struct EpisodeConfig
{
	std::size_t window = kDefaultWindow;
	std::size_t block = kDefaultBlock;
	/// Most recent training pairs kept for each refit.
	std::size_t gp_capacity = 60;
	/// Warm-started optimizer evaluations per refit.
	int refit_evaluations = 20;
	/// Compute per-channel JSD of the predictor against the GP each step.
	bool assess_against_gp = true;
	/// Observer for every read of a true sample: (sample index, time it became available, now).
	std::function<void(std::int64_t, std::int64_t, std::int64_t)> truth_access_hook;
};

/// Per-channel JSD between two sets of nine predictive distributions.
inline std::array<double, kFeatureCount> assess_against_oracle(const std::vector<GaussianPredictive>& nn_out,
                                                               const std::vector<GaussianPredictive>& gp_out)
{
	if (nn_out.size() != kFeatureCount || gp_out.size() != kFeatureCount)
		throw std::invalid_argument("assess_against_oracle: need nine distributions on each side");
	std::array<double, kFeatureCount> out{};
	for (std::size_t f = 0; f < kFeatureCount; ++f)
		out[f] = gaussian_jsd(gp_out[f], nn_out[f]);
	return out;
}

struct StepResult
{
	std::int64_t index = 0;
	std::size_t horizon = 0;
	FeatureVector predicted{}; ///< normalized units
	std::vector<GaussianPredictive> dist;
	std::array<double, kFeatureCount> jsd_vs_gp{};
	std::int64_t time_ns = 0;
};

struct BlockRecord
{
	std::size_t block = 0;
	std::int64_t first = 0;
	std::int64_t last = 0;
	/// Samples of this block whose true values had arrived at refit time.
	std::size_t delivered = 0;
	/// No true sample of the block was available at refit.
	bool self_fed = false;
	bool refit = false;
	std::int64_t refit_ns = 0;
	/// Values (normalized) of the block's samples as fed into the refit.
	std::vector<FeatureVector> refit_samples;
};

/**
 * The inference state machine for one trace and one predictor.
 *
 * Starts with the first `window` true samples as history. Each
 * predict_next() appends its prediction to the history; after `block`
 * predictions the GP is refit on the best-known samples: true values that
 * have arrived by then, predictions otherwise. Emitted predictions are never
 * rewritten.
 */
class EpisodeState
{
public:
	EpisodeState(const Trace& trace, MultiOutputGp gp, std::vector<RegressionPair> offline_pairs, FeatureSubset subset,
	             const std::vector<ArrivalEvent>& arrivals, EpisodeConfig cfg = {})
	: trace_(&trace), gp_(std::move(gp)), offline_(std::move(offline_pairs)), subset_(subset), cfg_(std::move(cfg))
	{
		if (cfg_.window == 0 || cfg_.block == 0)
			throw std::invalid_argument("EpisodeState: window and block must be positive");
		if (trace.size() < cfg_.window + 1)
			throw PipelineError(PipelineError::Kind::TooShort,
			                    "trace has " + std::to_string(trace.size()) + " samples; need more than the " +
			                        std::to_string(cfg_.window) + "-sample warm-up window");
		if (gp_.outputs() != kFeatureCount ||
		    gp_.dim() != static_cast<Eigen::Index>(cfg_.window * subset_.size()))
			throw std::invalid_argument("EpisodeState: GP does not match window and subset");
		arrivals_.assign(trace.size(), std::nullopt);
		for (const auto& e : arrivals) {
			const auto pos = position_of(e.index);
			if (!pos)
				throw PipelineError(PipelineError::Kind::InvalidArrivals,
				                    "arrival for unknown sample index " + std::to_string(e.index));
			if (arrivals_[*pos])
				throw PipelineError(PipelineError::Kind::InvalidArrivals,
				                    "two arrivals for sample index " + std::to_string(e.index));
			arrivals_[*pos] = e;
		}
		series_.resize(trace.size());
		known_true_.assign(trace.size(), false);
		now_ = cfg_.window; // positions [0, window) are the warm-up
		for (std::size_t i = 0; i < cfg_.window; ++i) {
			observe_truth(i, trace[i].t);
			series_[i] = trace[i].values;
			known_true_[i] = true;
		}
		rebuild_history();
	}

	std::size_t position() const noexcept { return now_; }
	std::size_t remaining() const noexcept { return trace_->size() - now_; }
	std::size_t refit_counter() const noexcept { return counter_; }
	std::size_t refits() const noexcept { return refits_; }
	const MultiOutputGp& gp() const noexcept { return gp_; }
	const FeatureSubset& subset() const noexcept { return subset_; }
	const std::deque<FeatureVector>& history() const noexcept { return history_; }
	const std::vector<BlockRecord>& blocks() const noexcept { return blocks_; }

	/// Encoded current window.
	Eigen::VectorXd current_input() const
	{
		Eigen::MatrixXd w(static_cast<Eigen::Index>(cfg_.window), static_cast<Eigen::Index>(kFeatureCount));
		for (std::size_t r = 0; r < cfg_.window; ++r)
			for (std::size_t k = 0; k < kFeatureCount; ++k)
				w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = history_[r][k];
		return encode_window(w, subset_);
	}

	/**
	 * Predicts the next sample, slides it into the history and advances the
	 * refit counter; on reaching the block size the GP is refit (not part of
	 * the timed region).
	 */
	StepResult predict_next(const Predictor& predictor)
	{
		if (now_ >= trace_->size())
			throw PipelineError(PipelineError::Kind::TooShort, "episode already reached the end of the trace");
		const Eigen::VectorXd x = current_input();
		StepResult step;
		step.index = (*trace_)[now_].t;
		step.horizon = counter_ + 1;

		const auto t0 = std::chrono::steady_clock::now();
		try {
			if (std::holds_alternative<GpPredictor>(predictor)) {
				step.dist = gp_.predict(x);
			} else {
				const auto* net = std::get<NnPredictor>(predictor).net;
				if (!net)
					throw std::invalid_argument("null network");
				step.dist = net->forward(x, Mode::Eval);
			}
		} catch (const std::exception& e) {
			throw PipelineError(PipelineError::Kind::PredictorFailure,
			                    "predictor failed at sample " + std::to_string(step.index) + ": " + e.what());
		}
		const auto t1 = std::chrono::steady_clock::now();
		step.time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();

		for (std::size_t f = 0; f < kFeatureCount; ++f) {
			if (!std::isfinite(step.dist[f].mean) || !std::isfinite(step.dist[f].variance))
				throw PipelineError(PipelineError::Kind::PredictorFailure,
				                    "non-finite prediction at sample " + std::to_string(step.index));
			step.predicted[f] = step.dist[f].mean;
		}
		if (cfg_.assess_against_gp && std::holds_alternative<NnPredictor>(predictor))
			step.jsd_vs_gp = assess_against_oracle(step.dist, gp_.predict(x));

		series_[now_] = step.predicted;
		history_.pop_front();
		history_.push_back(step.predicted);
		++now_;
		++counter_;
		if (counter_ == cfg_.block)
			refit();
		return step;
	}

private:
	std::optional<std::size_t> position_of(std::int64_t index) const
	{
		// Trace indices are strictly increasing; most traces are 1..n.
		const auto& s = trace_->samples();
		if (index >= 1 && static_cast<std::size_t>(index) <= s.size() && s[static_cast<std::size_t>(index - 1)].t == index)
			return static_cast<std::size_t>(index - 1);
		auto it = std::lower_bound(s.begin(), s.end(), index,
		                           [](const SignalSample& a, std::int64_t v) { return a.t < v; });
		if (it == s.end() || it->t != index)
			return std::nullopt;
		return static_cast<std::size_t>(it - s.begin());
	}

	std::int64_t now_index() const { return (*trace_)[now_ - 1].t; }

	void observe_truth(std::size_t pos, std::int64_t available_at)
	{
		if (cfg_.truth_access_hook)
			cfg_.truth_access_hook((*trace_)[pos].t, available_at, now_ > 0 ? now_index() : (*trace_)[pos].t);
	}

	void rebuild_history()
	{
		history_.clear();
		for (std::size_t i = now_ - cfg_.window; i < now_; ++i)
			history_.push_back(series_[i]);
	}

	void refit()
	{
		BlockRecord rec;
		rec.block = blocks_.size();
		rec.first = (*trace_)[now_ - counter_].t;
		rec.last = now_index();
		const std::int64_t now_idx = now_index();
		// Splice in every true sample that has arrived by now.
		for (std::size_t i = cfg_.window; i < now_; ++i) {
			if (known_true_[i] || !arrivals_[i] || arrivals_[i]->missing())
				continue;
			const auto& e = *arrivals_[i];
			if (e.index + e.delay > now_idx)
				continue;
			observe_truth(i, e.index + e.delay);
			series_[i] = e.payload->values;
			known_true_[i] = true;
		}
		for (std::size_t i = now_ - counter_; i < now_; ++i) {
			if (known_true_[i])
				++rec.delivered;
			rec.refit_samples.push_back(series_[i]);
		}
		rec.self_fed = rec.delivered == 0;

		const auto t0 = std::chrono::steady_clock::now();
		std::vector<RegressionPair> pairs = offline_;
		for (std::size_t t = cfg_.window; t < now_; ++t) {
			RegressionPair p;
			p.window.resize(static_cast<Eigen::Index>(cfg_.window), static_cast<Eigen::Index>(kFeatureCount));
			for (std::size_t r = 0; r < cfg_.window; ++r)
				for (std::size_t k = 0; k < kFeatureCount; ++k)
					p.window(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = series_[t - cfg_.window + r][k];
			p.next = series_[t];
			pairs.push_back(std::move(p));
		}
		GpFitOptions opts;
		opts.optimize = cfg_.refit_evaluations > 0;
		opts.max_evaluations = cfg_.refit_evaluations;
		opts.step = 0.25;
		gp_ = fit_oracle(pairs, subset_, gp_.hypers(), opts, cfg_.gp_capacity);
		rec.refit_ns =
		    std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
		rec.refit = true;
		blocks_.push_back(std::move(rec));
		++refits_;
		counter_ = 0;
		rebuild_history();
	}

	const Trace* trace_;
	MultiOutputGp gp_;
	std::vector<RegressionPair> offline_;
	FeatureSubset subset_;
	EpisodeConfig cfg_;
	std::vector<std::optional<ArrivalEvent>> arrivals_;
	std::vector<FeatureVector> series_;
	std::vector<bool> known_true_;
	std::deque<FeatureVector> history_;
	std::vector<BlockRecord> blocks_;
	std::size_t now_ = 0;
	std::size_t counter_ = 0;
	std::size_t refits_ = 0;
};

/// One row per predicted sample; values in raw units.
struct PredictionRecord
{
	std::int64_t index = 0;
	std::size_t horizon = 0;
	std::size_t block = 0;
	FeatureVector predicted{};
	FeatureVector truth{};
	FeatureVector abs_error{};
	FeatureVector mean{};     ///< predictive mean, normalized units
	FeatureVector variance{}; ///< predictive variance, normalized units
	FeatureVector truth_normalized{};
	std::array<double, kFeatureCount> jsd_vs_gp{};
	std::int64_t time_ns = 0;
};

struct EpisodeResult
{
	std::string trace_name;
	Side side = Side::Human;
	std::string predictor;
	FeatureSubset subset;
	std::string loss_model;
	std::vector<PredictionRecord> records;
	std::vector<BlockRecord> blocks;
	std::size_t refits = 0;

	std::size_t predicted() const { return records.size(); }

	/// Mean absolute error (raw units, averaged over channels) per horizon 1..block.
	std::vector<double> horizon_error(std::size_t block = kDefaultBlock) const
	{
		std::vector<double> sum(block, 0.0);
		std::vector<std::size_t> cnt(block, 0);
		for (const auto& r : records) {
			if (r.horizon == 0 || r.horizon > block)
				continue;
			double e = 0.0;
			for (double v : r.abs_error)
				e += v;
			sum[r.horizon - 1] += e / static_cast<double>(kFeatureCount);
			++cnt[r.horizon - 1];
		}
		for (std::size_t h = 0; h < block; ++h)
			sum[h] = cnt[h] ? sum[h] / static_cast<double>(cnt[h]) : 0.0;
		return sum;
	}

	/// Fraction of (sample, channel) truths inside the central `level` band.
	double band_coverage(double level) const
	{
		std::size_t inside = 0;
		for (const auto& r : records)
			for (std::size_t k = 0; k < kFeatureCount; ++k) {
				const auto [lo, hi] = uncertainty_band({r.mean[k], r.variance[k]}, level);
				inside += r.truth_normalized[k] >= lo && r.truth_normalized[k] <= hi;
			}
		return records.empty() ? 0.0 : static_cast<double>(inside) / static_cast<double>(records.size() * kFeatureCount);
	}

	std::vector<std::int64_t> timings() const
	{
		std::vector<std::int64_t> t;
		for (const auto& r : records)
			t.push_back(r.time_ns);
		return t;
	}

	/// CSV: index,horizon,block, pred_*, truth_*, abserr_*, jsd_*[, time_ns].
	void write_csv(std::ostream& out, bool include_timing = true) const
	{
		out << "# hapticgp-episode v1\n";
		out << "index,horizon,block";
		for (const char* prefix : {"pred_", "truth_", "abserr_", "jsd_"})
			for (auto n : kFeatureNames)
				out << ',' << prefix << n;
		out << (include_timing ? ",time_ns\n" : "\n");
		for (const auto& r : records) {
			out << r.index << ',' << r.horizon << ',' << r.block;
			for (const auto* arr : {&r.predicted, &r.truth, &r.abs_error, &r.jsd_vs_gp})
				for (double v : *arr)
					out << ',' << detail::format_double(v);
			if (include_timing)
				out << ',' << r.time_ns;
			out << '\n';
		}
	}

	/// Summary without per-sample timing; timing medians go under "timing".
	nlohmann::json summary_json(bool include_timing = true) const
	{
		nlohmann::json j;
		j["format"] = "hapticgp-episode-summary";
		j["version"] = 1;
		j["trace"] = trace_name;
		j["side"] = std::string(to_string(side));
		j["predictor"] = predictor;
		j["subset"] = subset.indices();
		j["loss_model"] = loss_model;
		j["predicted"] = predicted();
		j["refits"] = refits;
		nlohmann::json blocks_j = nlohmann::json::array();
		for (const auto& b : blocks)
			blocks_j.push_back({{"block", b.block},
			                    {"first", b.first},
			                    {"last", b.last},
			                    {"delivered", b.delivered},
			                    {"self_fed", b.self_fed}});
		j["blocks"] = std::move(blocks_j);
		FeatureVector mae{};
		for (const auto& r : records)
			for (std::size_t k = 0; k < kFeatureCount; ++k)
				mae[k] += r.abs_error[k];
		if (!records.empty())
			for (auto& v : mae)
				v /= static_cast<double>(records.size());
		j["mean_abs_error"] = mae;
		j["horizon_error"] = horizon_error();
		j["band_coverage_95"] = band_coverage(0.95);
		if (include_timing) {
			auto t = timings();
			std::sort(t.begin(), t.end());
			j["timing"] = {{"median_ns", t.empty() ? 0 : t[t.size() / 2]}};
		}
		return j;
	}
};

/**
 * Runs predict_next over the whole trace after the warm-up window and
 * scores every prediction against the trace afterwards.
 */
inline EpisodeResult run_episode(const Trace& trace, const Predictor& predictor, const FeatureSubset& subset,
                                 const std::vector<ArrivalEvent>& arrivals, const MultiOutputGp& initial_gp,
                                 const std::vector<RegressionPair>& offline_pairs, const EpisodeConfig& cfg = {})
{
	if (trace.size() < cfg.window + cfg.block)
		throw PipelineError(PipelineError::Kind::TooShort,
		                    "trace has " + std::to_string(trace.size()) + " samples; an episode needs at least " +
		                        std::to_string(cfg.window + cfg.block));
	EpisodeState state(trace, initial_gp, offline_pairs, subset, arrivals, cfg);
	EpisodeResult result;
	result.trace_name = trace.name();
	result.side = trace.side();
	result.predictor = std::holds_alternative<GpPredictor>(predictor) ? "gp" : "nn";
	result.subset = subset;
	std::vector<StepResult> steps;
	std::vector<std::size_t> block_of;
	while (state.remaining() > 0) {
		block_of.push_back(state.refits());
		steps.push_back(state.predict_next(predictor));
	}
	result.blocks = state.blocks();
	result.refits = state.refits();

	// Scoring happens after the fact.
	const auto& norm = trace.norm();
	for (std::size_t i = 0; i < steps.size(); ++i) {
		const auto& s = steps[i];
		PredictionRecord r;
		r.index = s.index;
		r.horizon = s.horizon;
		r.block = block_of[i];
		const auto& truth = trace[cfg.window + i].values;
		for (std::size_t k = 0; k < kFeatureCount; ++k) {
			r.predicted[k] = norm.to_raw(k, s.predicted[k]);
			r.truth[k] = norm.to_raw(k, truth[k]);
			r.abs_error[k] = std::abs(r.predicted[k] - r.truth[k]);
			r.mean[k] = s.dist[k].mean;
			r.variance[k] = s.dist[k].variance;
			r.truth_normalized[k] = truth[k];
		}
		r.jsd_vs_gp = s.jsd_vs_gp;
		r.time_ns = s.time_ns;
		result.records.push_back(r);
	}
	return result;
}

} // namespace hapticgp

#endif // HAPTICGP_PIPELINE_HPP
