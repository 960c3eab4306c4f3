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
 * \file hapticgp/metrics.hpp
 *
 * \brief Range-normalized accuracy: 100 max(0, 1 - RMSE / (max - min of
 *  the true signal)), per channel.
 */

#ifndef HAPTICGP_METRICS_HPP
#define HAPTICGP_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace hapticgp {

inline double rmse(std::span<const double> pred, std::span<const double> truth)
{
	if (pred.size() != truth.size())
		throw std::invalid_argument("rmse: length mismatch");
	if (truth.empty())
		return 0.0;
	double ss = 0.0;
	for (std::size_t i = 0; i < pred.size(); ++i) {
		const double d = pred[i] - truth[i];
		ss += d * d;
	}
	return std::sqrt(ss / static_cast<double>(truth.size()));
}

/**
 * Accuracy in percent over one evaluation segment. A constant true signal
 * scores 100 when RMSE <= 1e-9 and 0 otherwise.
 */
inline double accuracy_percent(std::span<const double> pred, std::span<const double> truth)
{
	if (truth.empty())
		throw std::invalid_argument("accuracy_percent: empty segment");
	const double err = rmse(pred, truth);
	const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
	const double range = *hi - *lo;
	if (range <= 0.0)
		return err <= 1e-9 ? 100.0 : 0.0;
	return 100.0 * std::max(0.0, 1.0 - err / range);
}

struct MeanStd
{
	double mean = 0.0;
	double std = 0.0;

	friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

/// Mean and population standard deviation.
inline MeanStd mean_std(std::span<const double> v)
{
	MeanStd r;
	if (v.empty())
		return r;
	for (double x : v)
		r.mean += x;
	r.mean /= static_cast<double>(v.size());
	double ss = 0.0;
	for (double x : v)
		ss += (x - r.mean) * (x - r.mean);
	r.std = std::sqrt(ss / static_cast<double>(v.size()));
	return r;
}

} // namespace hapticgp

#endif // HAPTICGP_METRICS_HPP
