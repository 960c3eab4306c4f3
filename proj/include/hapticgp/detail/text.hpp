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


// Number formatting and splitting helpers shared by the CSV readers and
// writers. Doubles are printed in shortest round-trip form so that
// write/parse cycles are bit-exact.

#ifndef HAPTICGP_DETAIL_TEXT_HPP
#define HAPTICGP_DETAIL_TEXT_HPP

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace hapticgp::detail {

inline std::string format_double(double v)
{
	char buf[64];
	auto res = std::to_chars(buf, buf + sizeof(buf), v);
	return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s)
{
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '"'))
		s.remove_prefix(1);
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
		s.remove_suffix(1);
	return s;
}

/// Full-field parse; nullopt if the field is not a number. NaN/Inf parse.
inline std::optional<double> parse_double(std::string_view s)
{
	s = trim(s);
	if (!s.empty() && s.front() == '+')
		s.remove_prefix(1);
	if (s.empty())
		return std::nullopt;
	double v = 0.0;
	auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
		return std::nullopt;
	return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
	std::vector<std::string_view> out;
	std::size_t pos = 0;
	while (true) {
		auto next = line.find(sep, pos);
		if (next == std::string_view::npos) {
			out.push_back(line.substr(pos));
			break;
		}
		out.push_back(line.substr(pos, next - pos));
		pos = next + 1;
	}
	return out;
}

template <class Range>
std::string join_doubles(const Range& r, char sep = ',')
{
	std::string out;
	bool first = true;
	for (double v : r) {
		if (!first)
			out.push_back(sep);
		out += format_double(v);
		first = false;
	}
	return out;
}

/// 64-bit FNV-1a; used for config fingerprints.
inline std::uint64_t fnv1a(std::string_view s)
{
	std::uint64_t h = 1469598103934665603ULL;
	for (unsigned char c : s) {
		h ^= c;
		h *= 1099511628211ULL;
	}
	return h;
}

} // namespace hapticgp::detail

#endif // HAPTICGP_DETAIL_TEXT_HPP
