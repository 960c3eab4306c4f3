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
 * \file hapticgp/ingest.hpp
 *
 * \brief Haptic trace ingestion: CSV parsing against a column schema,
 *  per-channel normalization, lag windowing and a synthetic trace generator.
 */

#ifndef HAPTICGP_INGEST_HPP
#define HAPTICGP_INGEST_HPP

#include <hapticgp/core.hpp>
#include <hapticgp/detail/text.hpp>

#include <Eigen/Dense>

#include "json.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hapticgp {

using FeatureVector = std::array<double, kFeatureCount>;

/// One timestamped force/velocity/position sample of one side.
struct SignalSample
{
	std::int64_t t = 0; ///< 1-based sample index
	Side side = Side::Human;
	FeatureVector values{}; ///< [fx,fy,fz,vx,vy,vz,px,py,pz]

	std::span<const double, 3> force() const { return std::span<const double, 3>(values.data(), 3); }
	std::span<const double, 3> velocity() const { return std::span<const double, 3>(values.data() + 3, 3); }
	std::span<const double, 3> position() const { return std::span<const double, 3>(values.data() + 6, 3); }

	friend bool operator==(const SignalSample&, const SignalSample&) = default;
};

/// Per-channel affine map: raw = shift + scale * normalized.
struct Normalization
{
	FeatureVector shift{};
	FeatureVector scale{1, 1, 1, 1, 1, 1, 1, 1, 1};

	double to_normalized(std::size_t k, double raw) const { return (raw - shift[k]) / scale[k]; }
	double to_raw(std::size_t k, double normalized) const { return shift[k] + scale[k] * normalized; }

	bool is_identity() const
	{
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			if (shift[k] != 0.0 || scale[k] != 1.0)
				return false;
		return true;
	}

	/// The map that first applies `inner` (normalized -> intermediate) and then *this.
	Normalization then_inner(const Normalization& inner) const
	{
		Normalization out;
		for (std::size_t k = 0; k < kFeatureCount; ++k) {
			out.shift[k] = shift[k] + scale[k] * inner.shift[k];
			out.scale[k] = scale[k] * inner.scale[k];
		}
		return out;
	}

	friend bool operator==(const Normalization&, const Normalization&) = default;
};

class IngestError : public Error
{
public:
	enum class Kind { MissingColumn, NonMonotoneTime, NonFiniteValue, TooShort, Malformed, Io };

	IngestError(Kind kind, std::string message, std::string column = {}, std::vector<std::size_t> rows = {})
	: Error(std::move(message)), kind_(kind), column_(std::move(column)), rows_(std::move(rows))
	{
	}

	Kind kind() const noexcept { return kind_; }
	/// Offending column header (MissingColumn).
	const std::string& column() const noexcept { return column_; }
	/// 1-based file line numbers of offending rows.
	const std::vector<std::size_t>& rows() const noexcept { return rows_; }

private:
	Kind kind_;
	std::string column_;
	std::vector<std::size_t> rows_;
};

inline std::string_view to_string(IngestError::Kind k)
{
	switch (k) {
	case IngestError::Kind::MissingColumn: return "MissingColumn";
	case IngestError::Kind::NonMonotoneTime: return "NonMonotoneTime";
	case IngestError::Kind::NonFiniteValue: return "NonFiniteValue";
	case IngestError::Kind::TooShort: return "TooShort";
	case IngestError::Kind::Malformed: return "Malformed";
	case IngestError::Kind::Io: return "Io";
	}
	return "Unknown";
}

/**
 * An ordered, validated sequence of samples for one side.
 *
 * Immutable after construction. Values are stored in whatever space the
 * normalization record says: raw = norm.shift + norm.scale * value.
 */
class Trace
{
public:
	Trace() = default;

	Trace(std::string name, Side side, std::vector<SignalSample> samples, Normalization norm = {})
	: name_(std::move(name)), side_(side), samples_(std::move(samples)), norm_(norm)
	{
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			if (!(norm_.scale[k] > 0.0) || !std::isfinite(norm_.scale[k]) || !std::isfinite(norm_.shift[k]))
				throw std::invalid_argument("Trace: normalization scale must be positive and finite");
		for (std::size_t i = 0; i < samples_.size(); ++i) {
			for (double v : samples_[i].values)
				if (!std::isfinite(v))
					throw IngestError(IngestError::Kind::NonFiniteValue,
					                  "Trace: non-finite value in sample " + std::to_string(i + 1), {}, {i + 1});
			if (i > 0 && samples_[i].t <= samples_[i - 1].t)
				throw IngestError(IngestError::Kind::NonMonotoneTime,
				                  "Trace: sample index not strictly increasing at " + std::to_string(i + 1), {},
				                  {i + 1});
		}
	}

	const std::string& name() const noexcept { return name_; }
	Side side() const noexcept { return side_; }
	const std::vector<SignalSample>& samples() const noexcept { return samples_; }
	const Normalization& norm() const noexcept { return norm_; }
	std::size_t size() const noexcept { return samples_.size(); }
	const SignalSample& operator[](std::size_t i) const { return samples_[i]; }

	/// size() x 9 matrix of stored values.
	Eigen::MatrixXd matrix() const
	{
		Eigen::MatrixXd m(static_cast<Eigen::Index>(samples_.size()), static_cast<Eigen::Index>(kFeatureCount));
		for (std::size_t i = 0; i < samples_.size(); ++i)
			for (std::size_t k = 0; k < kFeatureCount; ++k)
				m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = samples_[i].values[k];
		return m;
	}

	/// Contiguous sub-trace [first, first+count), keeping original indices.
	Trace slice(std::size_t first, std::size_t count) const
	{
		if (first + count > samples_.size())
			throw std::out_of_range("Trace::slice out of range");
		std::vector<SignalSample> part(samples_.begin() + static_cast<std::ptrdiff_t>(first),
		                               samples_.begin() + static_cast<std::ptrdiff_t>(first + count));
		return Trace(name_, side_, std::move(part), norm_);
	}

	friend bool operator==(const Trace&, const Trace&) = default;

private:
	std::string name_;
	Side side_ = Side::Human;
	std::vector<SignalSample> samples_;
	Normalization norm_;
};

/// Maps the nine canonical channels (and optionally a time column) to CSV headers.
struct Schema
{
	std::array<std::string, kFeatureCount> columns{"fx", "fy", "fz", "vx", "vy", "vz", "px", "py", "pz"};
	std::optional<std::string> time_column;

	static Schema canonical()
	{
		Schema s;
		s.time_column = "t";
		return s;
	}

	/// {"fx": "Force X", ..., "time": "timestamp"}; unmapped channels keep their canonical name.
	static Schema from_json(const nlohmann::json& j)
	{
		Schema s;
		if (!j.is_object())
			throw std::invalid_argument("schema: expected a JSON object");
		for (auto it = j.begin(); it != j.end(); ++it) {
			if (it.key() == "time" || it.key() == "t") {
				s.time_column = it.value().get<std::string>();
				continue;
			}
			int k = feature_index(it.key());
			if (k < 0)
				throw std::invalid_argument("schema: unknown feature '" + it.key() + "'");
			s.columns[static_cast<std::size_t>(k)] = it.value().get<std::string>();
		}
		return s;
	}

	nlohmann::json to_json() const
	{
		nlohmann::json j = nlohmann::json::object();
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			j[std::string(kFeatureNames[k])] = columns[k];
		if (time_column)
			j["time"] = *time_column;
		return j;
	}
};

namespace detail {

inline bool getline_any_eol(std::istream& in, std::string& line)
{
	if (!std::getline(in, line))
		return false;
	if (!line.empty() && line.back() == '\r')
		line.pop_back();
	return true;
}

inline FeatureVector parse_feature_list(std::string_view text, std::size_t line_no)
{
	auto parts = split(text);
	if (parts.size() != kFeatureCount)
		throw IngestError(IngestError::Kind::Malformed, "expected 9 values in metadata line", {}, {line_no});
	FeatureVector out{};
	for (std::size_t k = 0; k < kFeatureCount; ++k) {
		auto v = parse_double(parts[k]);
		if (!v)
			throw IngestError(IngestError::Kind::Malformed, "bad number in metadata line", {}, {line_no});
		out[k] = *v;
	}
	return out;
}

} // namespace detail

/**
 * Parses a CSV stream into a Trace.
 *
 * Leading lines starting with '#' are metadata; `name=`, `side=`, `shift=`
 * and `scale=` entries written by write_trace() are honored. Every row with
 * a non-finite value is collected and reported in one NonFiniteValue error.
 */
inline Trace parse_trace(std::istream& in, const Schema& schema, std::string name = "trace", Side side = Side::Human)
{
	std::string line;
	std::size_t line_no = 0;
	Normalization norm;
	bool have_header = false;
	std::vector<std::string_view> header;
	std::string header_line;

	while (detail::getline_any_eol(in, line)) {
		++line_no;
		if (line.empty())
			continue;
		if (line.front() == '#') {
			std::string_view meta = detail::trim(std::string_view(line).substr(1));
			auto eq = meta.find('=');
			if (eq == std::string_view::npos)
				continue;
			auto key = detail::trim(meta.substr(0, eq));
			auto value = detail::trim(meta.substr(eq + 1));
			if (key == "name")
				name = std::string(value);
			else if (key == "side")
				side = side_from_string(value);
			else if (key == "shift")
				norm.shift = detail::parse_feature_list(value, line_no);
			else if (key == "scale")
				norm.scale = detail::parse_feature_list(value, line_no);
			continue;
		}
		header_line = line;
		have_header = true;
		break;
	}
	if (!have_header)
		throw IngestError(IngestError::Kind::Malformed, "missing header row");
	header = detail::split(header_line);
	for (auto& h : header)
		h = detail::trim(h);

	auto find_col = [&](const std::string& col) -> std::size_t {
		for (std::size_t i = 0; i < header.size(); ++i)
			if (header[i] == col)
				return i;
		throw IngestError(IngestError::Kind::MissingColumn, "missing column '" + col + "'", col);
	};

	std::array<std::size_t, kFeatureCount> col_idx{};
	for (std::size_t k = 0; k < kFeatureCount; ++k)
		col_idx[k] = find_col(schema.columns[k]);
	std::optional<std::size_t> time_idx;
	if (schema.time_column) {
		for (std::size_t i = 0; i < header.size(); ++i)
			if (header[i] == *schema.time_column)
				time_idx = i;
	}

	std::vector<SignalSample> samples;
	std::vector<std::size_t> bad_rows;
	std::string bad_column;
	std::optional<double> prev_time;
	while (detail::getline_any_eol(in, line)) {
		++line_no;
		if (detail::trim(line).empty())
			continue;
		auto fields = detail::split(line);
		if (fields.size() < header.size())
			throw IngestError(IngestError::Kind::Malformed,
			                  "row " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
			                      " fields, got " + std::to_string(fields.size()),
			                  {}, {line_no});
		SignalSample s;
		s.side = side;
		s.t = static_cast<std::int64_t>(samples.size() + 1);
		bool finite = true;
		for (std::size_t k = 0; k < kFeatureCount; ++k) {
			auto v = detail::parse_double(fields[col_idx[k]]);
			if (!v)
				throw IngestError(IngestError::Kind::Malformed,
				                  "row " + std::to_string(line_no) + ": column '" + schema.columns[k] +
				                      "' is not a number",
				                  schema.columns[k], {line_no});
			if (!std::isfinite(*v)) {
				if (finite && bad_column.empty())
					bad_column = schema.columns[k];
				finite = false;
			}
			s.values[k] = *v;
		}
		if (time_idx) {
			auto tv = detail::parse_double(fields[*time_idx]);
			if (!tv || !std::isfinite(*tv)) {
				if (finite && bad_column.empty())
					bad_column = *schema.time_column;
				finite = false;
			}
			else {
				if (prev_time && !(*tv > *prev_time))
					throw IngestError(IngestError::Kind::NonMonotoneTime,
					                  "row " + std::to_string(line_no) + ": time does not increase", *schema.time_column,
					                  {line_no});
				prev_time = *tv;
			}
		}
		if (!finite) {
			bad_rows.push_back(line_no);
			continue;
		}
		samples.push_back(s);
	}
	if (!bad_rows.empty()) {
		std::string msg = "non-finite values in rows";
		for (auto r : bad_rows)
			msg += " " + std::to_string(r);
		throw IngestError(IngestError::Kind::NonFiniteValue, msg, bad_column, bad_rows);
	}
	return Trace(std::move(name), side, std::move(samples), norm);
}

inline Trace parse_trace(const std::filesystem::path& path, const Schema& schema, Side side = Side::Human)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw IngestError(IngestError::Kind::Io, "cannot open " + path.string());
	return parse_trace(in, schema, path.stem().string(), side);
}

/// Canonical CSV: metadata comments, then `t,fx,...,pz` rows.
inline void write_trace(std::ostream& out, const Trace& trace)
{
	out << "# hapticgp-trace v1\n";
	out << "# name=" << trace.name() << '\n';
	out << "# side=" << to_string(trace.side()) << '\n';
	out << "# shift=" << detail::join_doubles(trace.norm().shift) << '\n';
	out << "# scale=" << detail::join_doubles(trace.norm().scale) << '\n';
	out << 't';
	for (auto n : kFeatureNames)
		out << ',' << n;
	out << '\n';
	for (const auto& s : trace.samples()) {
		out << s.t;
		for (double v : s.values)
			out << ',' << detail::format_double(v);
		out << '\n';
	}
}

inline void write_trace(const std::filesystem::path& path, const Trace& trace)
{
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw IngestError(IngestError::Kind::Io, "cannot write " + path.string());
	write_trace(out, trace);
}

/// Applies a given standardization step (e.g. statistics of a training split).
inline Trace normalize(const Trace& trace, const Normalization& step)
{
	for (std::size_t k = 0; k < kFeatureCount; ++k)
		if (!(step.scale[k] > 0.0))
			throw std::invalid_argument("normalize: scale must be positive");
	std::vector<SignalSample> out = trace.samples();
	for (auto& s : out)
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			s.values[k] = step.to_normalized(k, s.values[k]);
	return Trace(trace.name(), trace.side(), std::move(out), trace.norm().then_inner(step));
}

/**
 * Standardizes every channel to zero mean and unit population standard
 * deviation. Constant channels get scale 1. The returned normalization
 * record maps all the way back to the original raw units.
 */
inline Trace normalize(const Trace& trace)
{
	if (trace.size() == 0)
		throw std::invalid_argument("normalize: empty trace");
	const double n = static_cast<double>(trace.size());
	Normalization step;
	for (std::size_t k = 0; k < kFeatureCount; ++k) {
		double mean = 0.0;
		for (const auto& s : trace.samples())
			mean += s.values[k];
		mean /= n;
		double ss = 0.0;
		for (const auto& s : trace.samples()) {
			double d = s.values[k] - mean;
			ss += d * d;
		}
		double sd = std::sqrt(ss / n);
		step.shift[k] = mean;
		step.scale[k] = sd > 0.0 ? sd : 1.0;
	}
	return normalize(trace, step);
}

/// Maps stored values back to raw units; the result carries the identity record.
inline Trace denormalize(const Trace& trace)
{
	std::vector<SignalSample> out = trace.samples();
	for (auto& s : out)
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			s.values[k] = trace.norm().to_raw(k, s.values[k]);
	return Trace(trace.name(), trace.side(), std::move(out), Normalization{});
}

/// Contiguous lag window; `values` is len x 9 in canonical feature order.
struct SignalWindow
{
	std::int64_t start = 1; ///< sample index of the first row
	std::size_t len = 0;
	Eigen::MatrixXd values;
};

struct WindowPair
{
	SignalWindow input;
	SignalWindow target;
};

inline SignalWindow window_at(const Trace& trace, std::size_t first, std::size_t len)
{
	SignalWindow w;
	w.start = trace[first].t;
	w.len = len;
	w.values.resize(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(kFeatureCount));
	for (std::size_t i = 0; i < len; ++i)
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			w.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = trace[first + i].values[k];
	return w;
}

/**
 * Pairs each input window of `n` samples with the following `horizon`
 * samples, advancing by `stride`. Pairs never exceed the trace.
 */
inline std::vector<WindowPair> make_windows(const Trace& trace, std::size_t n = kDefaultWindow, std::size_t stride = kDefaultBlock,
                                            std::size_t horizon = kDefaultBlock)
{
	if (n == 0 || stride == 0 || horizon == 0)
		throw std::invalid_argument("make_windows: window, stride and horizon must be positive");
	if (trace.size() < n + horizon)
		throw IngestError(IngestError::Kind::TooShort,
		                  "trace has " + std::to_string(trace.size()) + " samples, need at least " +
		                      std::to_string(n + horizon));
	std::vector<WindowPair> out;
	for (std::size_t start = 0; start + n + horizon <= trace.size(); start += stride)
		out.push_back({window_at(trace, start, n), window_at(trace, start + n, horizon)});
	return out;
}

// ---------------------------------------------------------------------------
// Synthetic traces

enum class SyntheticKind { Sine, Drag, Tap };

inline std::string_view to_string(SyntheticKind k)
{
	switch (k) {
	case SyntheticKind::Sine: return "sine";
	case SyntheticKind::Drag: return "drag";
	case SyntheticKind::Tap: return "tap";
	}
	return "?";
}

inline SyntheticKind synthetic_kind_from_string(std::string_view s)
{
	if (s == "sine")
		return SyntheticKind::Sine;
	if (s == "drag")
		return SyntheticKind::Drag;
	if (s == "tap")
		return SyntheticKind::Tap;
	throw std::invalid_argument("unknown synthetic kind '" + std::string(s) + "'");
}

/**
 * Seed-dependent parameters of a synthetic motion.
 *
 * Positions per axis j are p_j(t) = amp_j sin(omega_j t + phase_j) (Sine)
 * plus a third harmonic (Drag) or a smooth raised-cosine tapping profile on
 * z (Tap). Velocities are exact time derivatives in units per second
 * (sample period dt). Forces follow a
 * spring-damper law f = -stiffness p - damping v, plus a soft contact term
 * for Tap. The robot side sees the same motion `lag` samples later with its
 * own stiffness.
 */
struct SyntheticMotion
{
	SyntheticKind kind = SyntheticKind::Sine;
	Side side = Side::Human;
	std::array<double, 3> amp{};
	std::array<double, 3> omega{};
	std::array<double, 3> phase{};
	std::array<double, 3> harmonic_amp{}; // Drag only
	double stiffness = 1.0;
	double damping = 0.0;
	double lag = 0.0;
	double dt = 0.01; ///< sample period in seconds
	double contact_gain = 0.0;  // Tap only
	double contact_level = 0.0; // Tap only

	static SyntheticMotion draw(SyntheticKind kind, Side side, std::uint64_t seed)
	{
		std::mt19937_64 rng(seed);
		std::uniform_real_distribution<double> unit(0.0, 1.0);
		SyntheticMotion m;
		m.kind = kind;
		m.side = side;
		constexpr double two_pi = 2.0 * std::numbers::pi;
		for (std::size_t j = 0; j < 3; ++j) {
			m.amp[j] = 0.02 + 0.08 * unit(rng);
			double period = 60.0 + 140.0 * unit(rng);
			m.omega[j] = two_pi / period;
			m.phase[j] = two_pi * unit(rng);
			m.harmonic_amp[j] = kind == SyntheticKind::Drag ? m.amp[j] * (0.2 + 0.2 * unit(rng)) : 0.0;
		}
		m.stiffness = 20.0 + 40.0 * unit(rng);
		m.damping = 1.0 + 2.0 * unit(rng);
		if (kind == SyntheticKind::Tap) {
			m.contact_gain = 200.0 + 200.0 * unit(rng);
			m.contact_level = 0.5;
		}
		if (side == Side::Robot) {
			m.lag = 2.0 + std::floor(4.0 * unit(rng));
			m.stiffness *= 1.5;
		}
		return m;
	}

	/// Noise-free value of canonical channel `ch` at sample index t.
	double clean_value(double t, std::size_t ch) const
	{
		const double tt = t - lag;
		const std::size_t j = ch % 3;
		const double arg = omega[j] * tt + phase[j];
		double p = amp[j] * std::sin(arg);
		double v = amp[j] * omega[j] / dt * std::cos(arg);
		if (kind == SyntheticKind::Drag) {
			p += harmonic_amp[j] * std::sin(3.0 * arg);
			v += harmonic_amp[j] * 3.0 * omega[j] / dt * std::cos(3.0 * arg);
		}
		double contact = 0.0;
		if (kind == SyntheticKind::Tap && j == 2) {
			// z taps: p = amp (1 - cos arg) / 2 ; contact force when above contact_level * amp.
			p = amp[j] * 0.5 * (1.0 - std::cos(arg));
			v = amp[j] * 0.5 * omega[j] / dt * std::sin(arg);
			double depth = (p - contact_level * amp[j]) / amp[j];
			contact = depth > 0.0 ? contact_gain * amp[j] * depth * depth : 0.0;
		}
		if (ch < 3)
			return -stiffness * p - damping * v - contact;
		if (ch < 6)
			return v;
		return p;
	}
};

/**
 * Deterministic synthetic trace of `len` samples (indices 1..len) with
 * additive N(0, noise_sd^2) noise on every channel.
 */
inline Trace generate_synthetic(SyntheticKind kind, std::size_t len, double noise_sd, std::uint64_t seed,
                                Side side = Side::Human)
{
	if (len < kDefaultWindow + kDefaultBlock + 1)
		throw std::invalid_argument("generate_synthetic: len must be at least 21");
	if (!(noise_sd >= 0.0))
		throw std::invalid_argument("generate_synthetic: noise_sd must be non-negative");
	const auto motion = SyntheticMotion::draw(kind, side, seed);
	std::mt19937_64 noise_rng(seed ^ 0x9E3779B97F4A7C15ULL);
	std::normal_distribution<double> gauss(0.0, 1.0);
	std::vector<SignalSample> samples(len);
	for (std::size_t i = 0; i < len; ++i) {
		samples[i].t = static_cast<std::int64_t>(i + 1);
		samples[i].side = side;
		for (std::size_t k = 0; k < kFeatureCount; ++k) {
			double clean = motion.clean_value(static_cast<double>(i + 1), k);
			samples[i].values[k] = noise_sd > 0.0 ? clean + noise_sd * gauss(noise_rng) : clean;
		}
	}
	std::string name = std::string(to_string(kind)) + "-" + std::to_string(seed);
	return Trace(std::move(name), side, std::move(samples));
}

} // namespace hapticgp

#endif // HAPTICGP_INGEST_HPP
