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
 * \file hapticgp/core.hpp
 *
 * \brief Shared vocabulary: sides, canonical feature order, feature subsets
 *  and the common exception base.
 */

#ifndef HAPTICGP_CORE_HPP
#define HAPTICGP_CORE_HPP

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hapticgp {

/// Number of channels in one haptic sample.
inline constexpr std::size_t kFeatureCount = 9;

/// Canonical channel order used by every module.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "fx", "fy", "fz", "vx", "vy", "vz", "px", "py", "pz"};

/// Default lag window and prediction block lengths.
inline constexpr std::size_t kDefaultWindow = 10;
inline constexpr std::size_t kDefaultBlock = 10;

enum class Side { Human, Robot };

inline std::string_view to_string(Side s) { return s == Side::Human ? "human" : "robot"; }

inline Side side_from_string(std::string_view s)
{
	if (s == "human" || s == "Human" || s == "H" || s == "h")
		return Side::Human;
	if (s == "robot" || s == "Robot" || s == "R" || s == "r")
		return Side::Robot;
	throw std::invalid_argument("unknown side '" + std::string(s) + "'");
}

/// Index of a canonical feature name, or -1.
inline int feature_index(std::string_view name)
{
	for (std::size_t i = 0; i < kFeatureCount; ++i)
		if (kFeatureNames[i] == name)
			return static_cast<int>(i);
	return -1;
}

/// Base class of all library errors.
class Error : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

/**
 * Bitmask over up to 32 input features.
 *
 * Bit i set means feature i takes part. The feature universe size is
 * carried along so that complements and enumeration are well defined.
 */
class FeatureSubset
{
public:
	using mask_type = std::uint32_t;

	FeatureSubset() = default;

	FeatureSubset(mask_type mask, std::size_t universe)
	: mask_(mask), universe_(universe)
	{
		if (universe > 32)
			throw std::invalid_argument("FeatureSubset: universe larger than 32");
		if (universe < 32 && (mask >> universe) != 0)
			throw std::invalid_argument("FeatureSubset: mask has bits outside the universe");
	}

	static FeatureSubset all(std::size_t universe)
	{
		return {universe == 32 ? ~mask_type{0} : ((mask_type{1} << universe) - 1), universe};
	}

	static FeatureSubset none(std::size_t universe) { return {0, universe}; }

	static FeatureSubset of(std::initializer_list<std::size_t> idx, std::size_t universe)
	{
		mask_type m = 0;
		for (auto i : idx)
			m |= mask_type{1} << i;
		return {m, universe};
	}

	static FeatureSubset of(const std::vector<std::size_t>& idx, std::size_t universe)
	{
		mask_type m = 0;
		for (auto i : idx)
			m |= mask_type{1} << i;
		return {m, universe};
	}

	mask_type mask() const noexcept { return mask_; }
	std::size_t universe() const noexcept { return universe_; }
	std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(mask_)); }
	bool empty() const noexcept { return mask_ == 0; }

	bool contains(std::size_t i) const noexcept { return i < 32 && ((mask_ >> i) & 1U) != 0; }

	FeatureSubset with(std::size_t i) const { return {mask_ | (mask_type{1} << i), universe_}; }
	FeatureSubset without(std::size_t i) const { return {mask_ & ~(mask_type{1} << i), universe_}; }

	/// Included feature indices, ascending.
	std::vector<std::size_t> indices() const
	{
		std::vector<std::size_t> out;
		out.reserve(size());
		for (std::size_t i = 0; i < universe_; ++i)
			if (contains(i))
				out.push_back(i);
		return out;
	}

	friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;

private:
	mask_type mask_ = 0;
	std::size_t universe_ = kFeatureCount;
};

} // namespace hapticgp

#endif // HAPTICGP_CORE_HPP
