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
 * \file hapticgp/gp.hpp
 *
 * \brief Exact Gaussian process regression with a squared-exponential
 *  kernel, Cholesky factorization with jitter escalation and
 *  log-marginal-likelihood hyperparameter fitting.
 */

#ifndef HAPTICGP_GP_HPP
#define HAPTICGP_GP_HPP

#include <hapticgp/core.hpp>
#include <hapticgp/detail/nelder_mead.hpp>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "json.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hapticgp {

class GpError : public Error
{
public:
	enum class Kind { SingularKernel, DimensionMismatch, InvalidArgument, Format };

	GpError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

	Kind kind() const noexcept { return kind_; }

private:
	Kind kind_;
};

/// k(a,b) = signal_variance * exp(-|a-b|^2 / (2 lengthscale^2))
struct RbfKernel
{
	double lengthscale = 1.0;
	double signal_variance = 1.0;

	template <class A, class B>
	double operator()(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) const
	{
		return signal_variance * std::exp(-0.5 * (a - b).squaredNorm() / (lengthscale * lengthscale));
	}
};

struct GpHyperparameters
{
	double lengthscale = 1.0;
	double signal_variance = 1.0;
	double noise_variance = 0.01;

	RbfKernel kernel() const { return {lengthscale, signal_variance}; }

	friend bool operator==(const GpHyperparameters&, const GpHyperparameters&) = default;
};

struct GpFitOptions
{
	bool optimize = true;
	int max_evaluations = 200;
	/// Initial simplex step in log-hyperparameter space.
	double step = 1.0;
	double jitter_start = 1e-10;
	double jitter_ceiling = 1e-4;
};

/// Predictive mean and variance for one scalar output.
struct GaussianPredictive
{
	double mean = 0.0;
	double variance = 0.0;
	/// Set when a slightly negative raw variance was clamped to zero.
	bool clamped = false;

	double stddev() const { return std::sqrt(variance); }
};

namespace detail {

struct JitteredCholesky
{
	Eigen::MatrixXd lower;
	double jitter = 0.0;
};

/// Factorizes A, adding jitter 0, then start, 10 start, ... up to ceiling to the diagonal.
inline std::optional<JitteredCholesky> cholesky_with_jitter(const Eigen::MatrixXd& a, double start, double ceiling)
{
	double jitter = 0.0;
	while (true) {
		Eigen::LLT<Eigen::MatrixXd> llt;
		if (jitter == 0.0)
			llt.compute(a);
		else
			llt.compute(a + jitter * Eigen::MatrixXd::Identity(a.rows(), a.cols()));
		if (llt.info() == Eigen::Success) {
			Eigen::MatrixXd lower = llt.matrixL();
			bool ok = lower.allFinite();
			for (Eigen::Index i = 0; ok && i < lower.rows(); ++i)
				ok = lower(i, i) > 0.0;
			if (ok)
				return JitteredCholesky{std::move(lower), jitter};
		}
		if (jitter == 0.0)
			jitter = start;
		else if (jitter * 10.0 <= ceiling * (1.0 + 1e-12))
			jitter *= 10.0;
		else
			return std::nullopt;
	}
}

inline Eigen::MatrixXd kernel_matrix(const RbfKernel& k, const Eigen::MatrixXd& rows)
{
	const auto n = rows.rows();
	Eigen::MatrixXd out(n, n);
	for (Eigen::Index i = 0; i < n; ++i) {
		out(i, i) = k.signal_variance;
		for (Eigen::Index j = 0; j < i; ++j) {
			double v = k(rows.row(i), rows.row(j));
			out(i, j) = v;
			out(j, i) = v;
		}
	}
	return out;
}

} // namespace detail

/**
 * A factorized GP on scalar targets with zero prior mean.
 *
 * Immutable once built; predict() is const and thread-safe.
 */
class GpModel
{
public:
	GpModel() = default;

	/// Factorizes with the given hyperparameters, no optimization.
	static GpModel build(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const GpHyperparameters& hyper,
	                     const GpFitOptions& opts = {})
	{
		validate(inputs, targets, hyper);
		auto factor = factorize(inputs, hyper, opts);
		if (!factor)
			throw GpError(GpError::Kind::SingularKernel,
			              "kernel matrix not positive definite with jitter up to " + std::to_string(opts.jitter_ceiling));
		return GpModel(std::move(inputs), std::move(targets), hyper, std::move(*factor));
	}

	/**
	 * Maximizes the log marginal likelihood over log(lengthscale),
	 * log(signal_variance) and log(noise_variance) from `init`. A zero
	 * noise variance in `init` stays fixed at zero.
	 */
	static GpModel fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const GpHyperparameters& init,
	                   const GpFitOptions& opts = {})
	{
		validate(inputs, targets, init);
		if (!opts.optimize || opts.max_evaluations <= 0)
			return build(std::move(inputs), std::move(targets), init, opts);

		const bool fit_noise = init.noise_variance > 0.0;
		Eigen::VectorXd x0(fit_noise ? 3 : 2);
		x0[0] = std::log(init.lengthscale);
		x0[1] = std::log(init.signal_variance);
		if (fit_noise)
			x0[2] = std::log(init.noise_variance);

		auto unpack = [&](const Eigen::VectorXd& x) {
			GpHyperparameters h;
			h.lengthscale = std::exp(x[0]);
			h.signal_variance = std::exp(x[1]);
			h.noise_variance = fit_noise ? std::exp(x[2]) : 0.0;
			return h;
		};
		auto objective = [&](const Eigen::VectorXd& x) {
			for (Eigen::Index i = 0; i < x.size(); ++i)
				if (!(std::abs(x[i]) <= 20.0))
					return std::numeric_limits<double>::infinity();
			auto h = unpack(x);
			auto factor = factorize(inputs, h, opts);
			if (!factor)
				return std::numeric_limits<double>::infinity();
			return -lml_from_factor(factor->lower, targets);
		};
		auto res = detail::nelder_mead(objective, x0, opts.max_evaluations, opts.step);
		GpHyperparameters best = std::isfinite(res.value) ? unpack(res.x) : init;
		auto model = build(std::move(inputs), std::move(targets), best, opts);
		model.evaluations_ = res.evaluations;
		return model;
	}

	const GpHyperparameters& hyper() const noexcept { return hyper_; }
	RbfKernel kernel() const noexcept { return hyper_.kernel(); }
	double jitter() const noexcept { return jitter_; }
	int evaluations() const noexcept { return evaluations_; }
	Eigen::Index size() const noexcept { return inputs_.rows(); }
	Eigen::Index dim() const noexcept { return inputs_.cols(); }
	const Eigen::MatrixXd& inputs() const noexcept { return inputs_; }
	const Eigen::VectorXd& targets() const noexcept { return targets_; }
	const Eigen::MatrixXd& cholesky() const noexcept { return lower_; }
	const Eigen::VectorXd& alpha() const noexcept { return alpha_; }

	/// K(S,S) + (noise + jitter) I, the matrix the stored factor represents.
	Eigen::MatrixXd regularized_kernel() const
	{
		Eigen::MatrixXd k = detail::kernel_matrix(kernel(), inputs_);
		k.diagonal().array() += hyper_.noise_variance;
		if (jitter_ != 0.0)
			k += jitter_ * Eigen::MatrixXd::Identity(k.rows(), k.cols());
		return k;
	}

	/// Predictive distribution of the latent function at x.
	template <class V>
	GaussianPredictive predict(const Eigen::MatrixBase<V>& x) const
	{
		if (x.size() != dim())
			throw GpError(GpError::Kind::DimensionMismatch,
			              "predict: input has dimension " + std::to_string(x.size()) + ", model expects " +
			                  std::to_string(dim()));
		const auto k = kernel();
		const auto n = size();
		Eigen::VectorXd kstar(n);
		for (Eigen::Index i = 0; i < n; ++i)
			kstar[i] = k(inputs_.row(i).transpose(), x);
		GaussianPredictive p;
		p.mean = kstar.dot(alpha_);
		lower_.triangularView<Eigen::Lower>().solveInPlace(kstar);
		double var = k.signal_variance - kstar.squaredNorm();
		if (var < 0.0) {
			p.clamped = true;
			var = 0.0;
		}
		p.variance = var;
		return p;
	}

	/// -1/2 Y'alpha - sum log L_ii - n/2 log(2 pi)
	double log_marginal_likelihood() const { return lml_from_factor(lower_, targets_); }

	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["format"] = "hapticgp-gp";
		j["version"] = 1;
		j["hyper"] = {{"lengthscale", hyper_.lengthscale},
		              {"signal_variance", hyper_.signal_variance},
		              {"noise_variance", hyper_.noise_variance}};
		j["jitter"] = jitter_;
		j["evaluations"] = evaluations_;
		nlohmann::json rows = nlohmann::json::array();
		for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
			std::vector<double> r(static_cast<std::size_t>(inputs_.cols()));
			for (Eigen::Index c = 0; c < inputs_.cols(); ++c)
				r[static_cast<std::size_t>(c)] = inputs_(i, c);
			rows.push_back(r);
		}
		j["inputs"] = std::move(rows);
		j["targets"] = std::vector<double>(targets_.data(), targets_.data() + targets_.size());
		return j;
	}

	static GpModel from_json(const nlohmann::json& j)
	{
		if (j.value("format", "") != "hapticgp-gp" || j.value("version", 0) != 1)
			throw GpError(GpError::Kind::Format, "not a hapticgp-gp v1 document");
		GpHyperparameters h;
		h.lengthscale = j.at("hyper").at("lengthscale").get<double>();
		h.signal_variance = j.at("hyper").at("signal_variance").get<double>();
		h.noise_variance = j.at("hyper").at("noise_variance").get<double>();
		const auto& rows = j.at("inputs");
		auto targets = j.at("targets").get<std::vector<double>>();
		const auto n = static_cast<Eigen::Index>(rows.size());
		const auto d = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
		Eigen::MatrixXd inputs(n, d);
		for (Eigen::Index i = 0; i < n; ++i) {
			auto r = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
			if (static_cast<Eigen::Index>(r.size()) != d)
				throw GpError(GpError::Kind::Format, "ragged input rows");
			for (Eigen::Index c = 0; c < d; ++c)
				inputs(i, c) = r[static_cast<std::size_t>(c)];
		}
		Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
		validate(inputs, y, h);
		const double jitter = j.at("jitter").get<double>();
		Eigen::MatrixXd a = detail::kernel_matrix(h.kernel(), inputs);
		a.diagonal().array() += h.noise_variance;
		if (jitter != 0.0)
			a += jitter * Eigen::MatrixXd::Identity(a.rows(), a.cols());
		Eigen::LLT<Eigen::MatrixXd> llt(a);
		if (llt.info() != Eigen::Success)
			throw GpError(GpError::Kind::SingularKernel, "stored jitter no longer factorizes");
		GpModel m(std::move(inputs), std::move(y), h, detail::JitteredCholesky{llt.matrixL(), jitter});
		m.evaluations_ = j.value("evaluations", 0);
		return m;
	}

private:
	GpModel(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const GpHyperparameters& hyper, detail::JitteredCholesky factor)
	: hyper_(hyper), inputs_(std::move(inputs)), targets_(std::move(targets)), lower_(std::move(factor.lower)),
	  jitter_(factor.jitter)
	{
		alpha_ = lower_.triangularView<Eigen::Lower>().solve(targets_);
		lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
	}

	static void validate(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const GpHyperparameters& h)
	{
		if (inputs.rows() < 1)
			throw GpError(GpError::Kind::InvalidArgument, "fit: need at least one training point");
		if (inputs.rows() != targets.size())
			throw GpError(GpError::Kind::DimensionMismatch,
			              "fit: " + std::to_string(inputs.rows()) + " inputs but " + std::to_string(targets.size()) +
			                  " targets");
		if (!inputs.allFinite() || !targets.allFinite())
			throw GpError(GpError::Kind::InvalidArgument, "fit: non-finite training data");
		if (!(h.lengthscale > 0.0) || !(h.signal_variance > 0.0) || !(h.noise_variance >= 0.0))
			throw GpError(GpError::Kind::InvalidArgument, "fit: hyperparameters must be positive");
	}

	static std::optional<detail::JitteredCholesky> factorize(const Eigen::MatrixXd& inputs, const GpHyperparameters& h,
	                                                         const GpFitOptions& opts)
	{
		Eigen::MatrixXd a = detail::kernel_matrix(h.kernel(), inputs);
		a.diagonal().array() += h.noise_variance;
		return detail::cholesky_with_jitter(a, opts.jitter_start, opts.jitter_ceiling);
	}

	static double lml_from_factor(const Eigen::MatrixXd& lower, const Eigen::VectorXd& y)
	{
		Eigen::VectorXd w = lower.triangularView<Eigen::Lower>().solve(y);
		const double n = static_cast<double>(y.size());
		return -0.5 * w.squaredNorm() - lower.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
	}

	GpHyperparameters hyper_;
	Eigen::MatrixXd inputs_;
	Eigen::VectorXd targets_;
	Eigen::MatrixXd lower_;
	Eigen::VectorXd alpha_;
	double jitter_ = 0.0;
	int evaluations_ = 0;
};

/// Central credible interval mean +/- z sqrt(variance), z the normal quantile for `level`.
inline std::pair<double, double> uncertainty_band(const GaussianPredictive& p, double level)
{
	if (!(level > 0.0 && level < 1.0))
		throw std::invalid_argument("uncertainty_band: level must lie in (0,1)");
	const boost::math::normal_distribution<double> unit;
	const double z = boost::math::quantile(unit, 0.5 + 0.5 * level);
	const double half = z * std::sqrt(p.variance);
	return {p.mean - half, p.mean + half};
}

/**
 * Flattens the selected columns of a window (rows = time) row-major,
 * giving a d = rows * |subset| input vector.
 */
inline Eigen::VectorXd encode_window(const Eigen::MatrixXd& window, const FeatureSubset& subset)
{
	const auto cols = subset.indices();
	Eigen::VectorXd out(window.rows() * static_cast<Eigen::Index>(cols.size()));
	Eigen::Index o = 0;
	for (Eigen::Index r = 0; r < window.rows(); ++r)
		for (auto c : cols)
			out[o++] = window(r, static_cast<Eigen::Index>(c));
	return out;
}

/// Heuristic starting point on standardized data: unit variances, lengthscale sqrt(d).
inline GpHyperparameters default_hyperparameters(Eigen::Index input_dim)
{
	GpHyperparameters h;
	h.lengthscale = std::sqrt(static_cast<double>(std::max<Eigen::Index>(input_dim, 1)));
	h.signal_variance = 1.0;
	h.noise_variance = 0.01;
	return h;
}

/**
 * One independent GP per output channel, all sharing the same inputs.
 */
class MultiOutputGp
{
public:
	MultiOutputGp() = default;

	explicit MultiOutputGp(std::vector<GpModel> models) : models_(std::move(models)) {}

	/// Fits `targets.cols()` independent models; `init` supplies one starting point per output.
	static MultiOutputGp fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
	                         const std::vector<GpHyperparameters>& init, const GpFitOptions& opts = {})
	{
		if (static_cast<Eigen::Index>(init.size()) != targets.cols())
			throw GpError(GpError::Kind::DimensionMismatch, "MultiOutputGp::fit: one init per output required");
		std::vector<GpModel> models;
		models.reserve(init.size());
		for (Eigen::Index c = 0; c < targets.cols(); ++c)
			models.push_back(GpModel::fit(inputs, targets.col(c), init[static_cast<std::size_t>(c)], opts));
		return MultiOutputGp(std::move(models));
	}

	static MultiOutputGp fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
	                         const GpHyperparameters& init, const GpFitOptions& opts = {})
	{
		return fit(inputs, targets, std::vector<GpHyperparameters>(static_cast<std::size_t>(targets.cols()), init), opts);
	}

	std::size_t outputs() const noexcept { return models_.size(); }
	Eigen::Index dim() const noexcept { return models_.empty() ? 0 : models_.front().dim(); }
	Eigen::Index size() const noexcept { return models_.empty() ? 0 : models_.front().size(); }
	const GpModel& operator[](std::size_t i) const { return models_[i]; }
	const std::vector<GpModel>& models() const noexcept { return models_; }

	std::vector<GpHyperparameters> hypers() const
	{
		std::vector<GpHyperparameters> out;
		for (const auto& m : models_)
			out.push_back(m.hyper());
		return out;
	}

	template <class V>
	std::vector<GaussianPredictive> predict(const Eigen::MatrixBase<V>& x) const
	{
		std::vector<GaussianPredictive> out;
		out.reserve(models_.size());
		for (const auto& m : models_)
			out.push_back(m.predict(x));
		return out;
	}

	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["format"] = "hapticgp-multigp";
		j["version"] = 1;
		j["models"] = nlohmann::json::array();
		for (const auto& m : models_)
			j["models"].push_back(m.to_json());
		return j;
	}

	static MultiOutputGp from_json(const nlohmann::json& j)
	{
		if (j.value("format", "") != "hapticgp-multigp" || j.value("version", 0) != 1)
			throw GpError(GpError::Kind::Format, "not a hapticgp-multigp v1 document");
		std::vector<GpModel> models;
		for (const auto& m : j.at("models"))
			models.push_back(GpModel::from_json(m));
		return MultiOutputGp(std::move(models));
	}

private:
	std::vector<GpModel> models_;
};

} // namespace hapticgp

#endif // HAPTICGP_GP_HPP
