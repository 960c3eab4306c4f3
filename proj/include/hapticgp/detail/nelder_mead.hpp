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


// Derivative-free local minimizer used for GP hyperparameter fitting.

#ifndef HAPTICGP_DETAIL_NELDER_MEAD_HPP
#define HAPTICGP_DETAIL_NELDER_MEAD_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace hapticgp::detail {

struct NelderMeadResult
{
	Eigen::VectorXd x;
	double value = std::numeric_limits<double>::infinity();
	int evaluations = 0;
};

/**
 * Minimizes f starting from x0 with an axis-aligned initial simplex of the
 * given step. Non-finite objective values are treated as +inf. The start
 * point is always evaluated first, so the result is never worse than f(x0).
 */
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                                    int max_evaluations, double step = 1.0, double ftol = 1e-10)
{
	const auto n = x0.size();
	NelderMeadResult best;
	best.x = x0;
	int evals = 0;
	auto eval = [&](const Eigen::VectorXd& x) {
		++evals;
		double v = f(x);
		if (!std::isfinite(v))
			v = std::numeric_limits<double>::infinity();
		return v;
	};
	if (max_evaluations <= 0 || n == 0) {
		if (max_evaluations > 0) {
			best.value = eval(x0);
			best.evaluations = evals;
		}
		return best;
	}

	std::vector<Eigen::VectorXd> pts;
	std::vector<double> vals;
	pts.push_back(x0);
	vals.push_back(eval(x0));
	for (Eigen::Index i = 0; i < n && evals < max_evaluations; ++i) {
		Eigen::VectorXd x = x0;
		x[i] += step;
		pts.push_back(x);
		vals.push_back(eval(x));
	}
	if (static_cast<Eigen::Index>(pts.size()) < n + 1) {
		auto it = std::min_element(vals.begin(), vals.end());
		best.x = pts[static_cast<std::size_t>(it - vals.begin())];
		best.value = *it;
		best.evaluations = evals;
		return best;
	}

	std::vector<std::size_t> order(pts.size());
	while (evals < max_evaluations) {
		std::iota(order.begin(), order.end(), 0);
		std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
		const std::size_t lo = order.front();
		const std::size_t hi = order.back();
		const std::size_t second = order[order.size() - 2];
		if (std::isfinite(vals[hi]) && std::abs(vals[hi] - vals[lo]) <= ftol * (1.0 + std::abs(vals[lo])))
			break;

		Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
		for (std::size_t i = 0; i < pts.size(); ++i)
			if (i != hi)
				centroid += pts[i];
		centroid /= static_cast<double>(n);

		Eigen::VectorXd xr = centroid + (centroid - pts[hi]);
		double fr = eval(xr);
		if (fr < vals[lo]) {
			if (evals >= max_evaluations) {
				pts[hi] = xr;
				vals[hi] = fr;
				break;
			}
			Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[hi]);
			double fe = eval(xe);
			if (fe < fr) {
				pts[hi] = xe;
				vals[hi] = fe;
			} else {
				pts[hi] = xr;
				vals[hi] = fr;
			}
			continue;
		}
		if (fr < vals[second]) {
			pts[hi] = xr;
			vals[hi] = fr;
			continue;
		}
		if (evals >= max_evaluations)
			break;
		const bool outside = fr < vals[hi];
		Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
		                             : Eigen::VectorXd(centroid + 0.5 * (pts[hi] - centroid));
		double fc = eval(xc);
		if (fc < (outside ? fr : vals[hi])) {
			pts[hi] = xc;
			vals[hi] = fc;
			continue;
		}
		// shrink toward the best vertex
		for (std::size_t i = 0; i < pts.size() && evals < max_evaluations; ++i) {
			if (i == lo)
				continue;
			pts[i] = pts[lo] + 0.5 * (pts[i] - pts[lo]);
			vals[i] = eval(pts[i]);
		}
	}
	auto it = std::min_element(vals.begin(), vals.end());
	best.x = pts[static_cast<std::size_t>(it - vals.begin())];
	best.value = *it;
	best.evaluations = evals;
	return best;
}

} // namespace hapticgp::detail

#endif // HAPTICGP_DETAIL_NELDER_MEAD_HPP
