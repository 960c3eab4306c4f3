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
 * \file hapticgp/divergence.hpp
 *
 * \brief Discrete Kullback-Leibler and Jensen-Shannon divergences between
 *  Gaussians binned on a shared uniform grid, plus the gradient of the JSD
 *  with respect to the second distribution's (mean, log-variance).
 *
 * All logarithms are natural, so 0 <= JSD <= log 2.
 */

#ifndef HAPTICGP_DIVERGENCE_HPP
#define HAPTICGP_DIVERGENCE_HPP

#include <hapticgp/core.hpp>
#include <hapticgp/gp.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace hapticgp {

class DivergenceError : public Error
{
public:
	using Error::Error;
};

/// Uniform grid of `bins` centers lo, lo+step, ..., lo+(bins-1) step.
struct Grid
{
	double lo = 0.0;
	double step = 1.0;
	std::size_t bins = 1;

	double center(std::size_t i) const { return lo + static_cast<double>(i) * step; }

	/// Lower edge of bin i; -inf for the first bin.
	double lower_edge(std::size_t i) const
	{
		return i == 0 ? -std::numeric_limits<double>::infinity() : lo + (static_cast<double>(i) - 0.5) * step;
	}

	/// Upper edge of bin i; +inf for the last bin.
	double upper_edge(std::size_t i) const
	{
		return i + 1 == bins ? std::numeric_limits<double>::infinity() : lo + (static_cast<double>(i) + 0.5) * step;
	}

	/// Grid whose first and last centers are `first` and `last`.
	static Grid spanning(double first, double last, std::size_t bins)
	{
		if (bins < 2)
			throw std::invalid_argument("Grid: need at least two bins");
		if (!(last > first) || !std::isfinite(first) || !std::isfinite(last))
			throw std::invalid_argument("Grid: invalid span");
		return {first, (last - first) / static_cast<double>(bins - 1), bins};
	}

	friend bool operator==(const Grid&, const Grid&) = default;
};

inline constexpr std::size_t kDefaultBins = 201;
inline constexpr double kDefaultGridHalfWidth = 6.0;
inline constexpr double kKlFloor = 1e-12;

/**
 * Shared grid for a set of Gaussians: [min mean - w sd_max, max mean + w sd_max].
 * A degenerate span (all point masses at one location) is widened to +/-1e-6.
 */
inline Grid make_grid(std::span<const GaussianPredictive> dists, std::size_t bins = kDefaultBins,
                      double half_width = kDefaultGridHalfWidth)
{
	if (dists.empty())
		throw std::invalid_argument("make_grid: no distributions");
	double lo = std::numeric_limits<double>::infinity();
	double hi = -std::numeric_limits<double>::infinity();
	double sd = 0.0;
	for (const auto& d : dists) {
		lo = std::min(lo, d.mean);
		hi = std::max(hi, d.mean);
		sd = std::max(sd, std::sqrt(std::max(d.variance, 0.0)));
	}
	lo -= half_width * sd;
	hi += half_width * sd;
	if (!(hi - lo > 1e-6)) {
		const double mid = 0.5 * (lo + hi);
		lo = mid - 1e-6;
		hi = mid + 1e-6;
	}
	return Grid::spanning(lo, hi, bins);
}

inline Grid make_grid(const GaussianPredictive& a, const GaussianPredictive& b, std::size_t bins = kDefaultBins,
                      double half_width = kDefaultGridHalfWidth)
{
	const GaussianPredictive both[2] = {a, b};
	return make_grid(std::span<const GaussianPredictive>(both, 2), bins, half_width);
}

enum class DistSource { Gp, Nn, Other };

struct DiscretizedDist
{
	Grid grid;
	std::vector<double> probs;
	DistSource source = DistSource::Other;

	double mean() const
	{
		double m = 0.0;
		for (std::size_t i = 0; i < probs.size(); ++i)
			m += probs[i] * grid.center(i);
		return m;
	}

	double variance() const
	{
		const double m = mean();
		double v = 0.0;
		for (std::size_t i = 0; i < probs.size(); ++i) {
			const double d = grid.center(i) - m;
			v += probs[i] * d * d;
		}
		return v;
	}
};

namespace detail {

inline double normal_pdf(double z)
{
	if (!std::isfinite(z))
		return 0.0;
	return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// P(za < Z < zb) for a standard normal, accurate in both tails.
inline double normal_mass(double za, double zb)
{
	constexpr double r = std::numbers::sqrt2 / 2.0;
	if (za >= 0.0)
		return 0.5 * (std::erfc(za * r) - std::erfc(zb * r));
	if (zb <= 0.0)
		return 0.5 * (std::erfc(-zb * r) - std::erfc(-za * r));
	return 1.0 - 0.5 * std::erfc(-za * r) - 0.5 * std::erfc(zb * r);
}

inline void require_same_grid(const DiscretizedDist& p, const DiscretizedDist& q)
{
	if (!(p.grid == q.grid) || p.probs.size() != q.probs.size())
		throw DivergenceError("GridMismatch: distributions are binned on different grids");
}

} // namespace detail

/**
 * Bins N(mean, variance) onto the grid: each bin receives the Gaussian mass
 * between its edges, with the outer bins absorbing the tails. Zero variance
 * gives a one-hot at the nearest center.
 */
inline DiscretizedDist discretize(double mean, double variance, const Grid& grid, DistSource source = DistSource::Other)
{
	if (!(variance >= 0.0) || !std::isfinite(mean))
		throw std::invalid_argument("discretize: need finite mean and non-negative variance");
	DiscretizedDist d{grid, std::vector<double>(grid.bins, 0.0), source};
	const double sd = std::sqrt(variance);
	if (sd == 0.0) {
		double pos = std::round((mean - grid.lo) / grid.step);
		pos = std::clamp(pos, 0.0, static_cast<double>(grid.bins - 1));
		d.probs[static_cast<std::size_t>(pos)] = 1.0;
		return d;
	}
	for (std::size_t i = 0; i < grid.bins; ++i) {
		const double za = (grid.lower_edge(i) - mean) / sd;
		const double zb = (grid.upper_edge(i) - mean) / sd;
		d.probs[i] = std::max(0.0, detail::normal_mass(za, zb));
	}
	return d;
}

inline DiscretizedDist discretize(const GaussianPredictive& g, const Grid& grid, DistSource source = DistSource::Other)
{
	return discretize(g.mean, g.variance, grid, source);
}

/**
 * sum_i p_i log(p_i / q_i), with 0 log 0 = 0.
 *
 * If some bin has p_i > 0 but q_i below 1e-12, q is floored at 1e-12 and
 * renormalized before summing; otherwise q is used as is.
 */
inline double kl(const DiscretizedDist& p, const DiscretizedDist& q)
{
	detail::require_same_grid(p, q);
	bool needs_floor = false;
	for (std::size_t i = 0; i < p.probs.size(); ++i)
		if (p.probs[i] > 0.0 && q.probs[i] < kKlFloor)
			needs_floor = true;
	double z = 1.0;
	if (needs_floor) {
		z = 0.0;
		for (double v : q.probs)
			z += std::max(v, kKlFloor);
	}
	double sum = 0.0;
	for (std::size_t i = 0; i < p.probs.size(); ++i) {
		if (p.probs[i] <= 0.0)
			continue;
		const double qi = needs_floor ? std::max(q.probs[i], kKlFloor) / z : q.probs[i];
		sum += p.probs[i] * std::log(p.probs[i] / qi);
	}
	return std::max(sum, 0.0);
}

namespace detail {

/// One bin's share of JSD; symmetric in (p, q) bit for bit.
inline double jsd_term(double p, double q)
{
	const double m = p + q;
	double t = 0.0;
	if (p > 0.0)
		t += p * std::log(2.0 * p / m);
	if (q > 0.0)
		t += q * std::log(2.0 * q / m);
	return 0.5 * t;
}

} // namespace detail

/// 1/2 KL(P||M) + 1/2 KL(Q||M) with M = (P+Q)/2.
inline double jsd(const DiscretizedDist& p, const DiscretizedDist& q)
{
	detail::require_same_grid(p, q);
	double sum = 0.0;
	for (std::size_t i = 0; i < p.probs.size(); ++i)
		sum += detail::jsd_term(p.probs[i], q.probs[i]);
	return std::clamp(sum, 0.0, std::numbers::ln2);
}

/// JSD between two Gaussians on their shared default grid.
inline double gaussian_jsd(const GaussianPredictive& a, const GaussianPredictive& b, std::size_t bins = kDefaultBins)
{
	const Grid g = make_grid(a, b, bins);
	return jsd(discretize(a, g), discretize(b, g));
}

struct JsdGradient
{
	double value = 0.0;
	double d_mean = 0.0;
	double d_log_variance = 0.0;
};

/**
 * JSD(p, discretize(mean_q, exp(log_var_q))) and its gradient with respect
 * to (mean_q, log_var_q), the grid held fixed.
 *
 * dJSD/dq_i = 1/2 log(2 q_i / (p_i + q_i)); dq_i/dtheta follows from the
 * Gaussian CDF at the bin edges.
 */
inline JsdGradient jsd_grad(const DiscretizedDist& p, double mean_q, double log_var_q, const Grid& grid)
{
	if (!(p.grid == grid))
		throw DivergenceError("GridMismatch: p is binned on a different grid");
	const double sd = std::exp(0.5 * log_var_q);
	JsdGradient g;
	double value = 0.0;
	// Edge terms are shared by neighbouring bins; walk the edges once.
	double prev_pdf = 0.0;   // phi(z) at lower edge of the current bin
	double prev_zpdf = 0.0;  // z phi(z) at lower edge
	double prev_z = -std::numeric_limits<double>::infinity();
	for (std::size_t i = 0; i < grid.bins; ++i) {
		const double ub = grid.upper_edge(i);
		const double zb = std::isfinite(ub) ? (ub - mean_q) / sd : std::numeric_limits<double>::infinity();
		const double pdf_b = detail::normal_pdf(zb);
		const double zpdf_b = std::isfinite(zb) ? zb * pdf_b : 0.0;
		const double qi = std::max(0.0, detail::normal_mass(prev_z, zb));
		const double pi = p.probs[i];
		value += detail::jsd_term(pi, qi);
		if (qi > 0.0) {
			const double dj_dq = 0.5 * std::log(2.0 * qi / (pi + qi));
			g.d_mean += dj_dq * (prev_pdf - pdf_b) / sd;
			g.d_log_variance += dj_dq * 0.5 * (prev_zpdf - zpdf_b);
		}
		prev_pdf = pdf_b;
		prev_zpdf = zpdf_b;
		prev_z = zb;
	}
	g.value = std::clamp(value, 0.0, std::numbers::ln2);
	return g;
}

} // namespace hapticgp

#endif // HAPTICGP_DIVERGENCE_HPP
