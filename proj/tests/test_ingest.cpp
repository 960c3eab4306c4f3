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

#include <hapticgp/ingest.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace hapticgp;

namespace {

const char* kHeader = "fx,fy,fz,vx,vy,vz,px,py,pz\n";

Trace parse_text(const std::string& text)
{
	std::istringstream in(text);
	return parse_trace(in, Schema::canonical(), "t");
}

Trace random_trace(std::size_t n, std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> g(3.0, 7.0);
	std::vector<SignalSample> s(n);
	for (std::size_t i = 0; i < n; ++i) {
		s[i].t = static_cast<std::int64_t>(i + 1);
		for (auto& v : s[i].values)
			v = g(rng);
	}
	return Trace("rand", Side::Human, s);
}

} // namespace

TEST(Parse, ZeroRowsParseButCannotWindow)
{
	const auto t = parse_text(std::string(kHeader) + "0,0,0,0,0,0,0,0,0\n0,0,0,0,0,0,0,0,0\n0,0,0,0,0,0,0,0,0\n");
	EXPECT_EQ(t.size(), 3u);
	try {
		make_windows(t);
		FAIL() << "expected TooShort";
	} catch (const IngestError& e) {
		EXPECT_EQ(e.kind(), IngestError::Kind::TooShort);
	}
}

TEST(Parse, NanReportsColumnAndRow)
{
	try {
		parse_text(std::string(kHeader) + "1,2,3,4,5,6,7,8,9\n1,2,3,4,NaN,6,7,8,9\n");
		FAIL() << "expected NonFiniteValue";
	} catch (const IngestError& e) {
		EXPECT_EQ(e.kind(), IngestError::Kind::NonFiniteValue);
		ASSERT_FALSE(e.rows().empty());
		EXPECT_EQ(e.rows().front(), 3u); // file line: header is line 1
		EXPECT_EQ(e.column(), "vy");
	}
}

TEST(Parse, MissingColumnIsNamed)
{
	try {
		parse_text("fx,fy,fz,vx,vy,vz,px,py\n1,2,3,4,5,6,7,8\n");
		FAIL() << "expected MissingColumn";
	} catch (const IngestError& e) {
		EXPECT_EQ(e.kind(), IngestError::Kind::MissingColumn);
		EXPECT_EQ(e.column(), "pz");
	}
}

TEST(Parse, TimeColumnMustIncrease)
{
	Schema s = Schema::canonical();
	s.time_column = "time";
	std::istringstream in("time,fx,fy,fz,vx,vy,vz,px,py,pz\n0.1,1,2,3,4,5,6,7,8,9\n0.1,1,2,3,4,5,6,7,8,9\n");
	try {
		parse_trace(in, s);
		FAIL() << "expected NonMonotoneTime";
	} catch (const IngestError& e) {
		EXPECT_EQ(e.kind(), IngestError::Kind::NonMonotoneTime);
	}
}

TEST(Parse, ColumnOrderFollowsSchema)
{
	const auto t = parse_text("pz,py,px,vz,vy,vx,fz,fy,fx\n9,8,7,6,5,4,3,2,1\n");
	for (std::size_t k = 0; k < kFeatureCount; ++k)
		EXPECT_EQ(t[0].values[k], static_cast<double>(k + 1));
}

TEST(Parse, WriteParseRoundTripIsBitExact)
{
	const auto orig = generate_synthetic(SyntheticKind::Drag, 1000, 0.05, 11, Side::Robot);
	std::stringstream buf;
	write_trace(buf, orig);
	const auto back = parse_trace(buf, Schema::canonical());
	EXPECT_EQ(back, orig);

	// Parse -> write -> parse is stable too, including a normalization record.
	const auto norm = normalize(orig);
	std::stringstream b2;
	write_trace(b2, norm);
	const auto n2 = parse_trace(b2, Schema::canonical());
	EXPECT_EQ(n2, norm);
}

TEST(Normalize, ConstantColumn)
{
	std::string text = kHeader;
	for (int i = 0; i < 4; ++i)
		text += "5,1,2,3,4,5,6,7," + std::to_string(i) + "\n";
	const auto n = normalize(parse_text(text));
	EXPECT_EQ(n.norm().shift[0], 5.0);
	EXPECT_EQ(n.norm().scale[0], 1.0);
	for (const auto& s : n.samples())
		EXPECT_EQ(s.values[0], 0.0);
}

TEST(Normalize, PopulationSigma)
{
	const auto n = normalize(parse_text(std::string(kHeader) + "0,0,0,0,0,0,0,0,0\n2,0,0,0,0,0,0,0,0\n"));
	EXPECT_DOUBLE_EQ(n.norm().shift[0], 1.0);
	EXPECT_DOUBLE_EQ(n.norm().scale[0], 1.0);
	EXPECT_DOUBLE_EQ(n[0].values[0], -1.0);
	EXPECT_DOUBLE_EQ(n[1].values[0], 1.0);
}

TEST(Normalize, DenormalizeRoundTrip)
{
	const auto raw = random_trace(200, 5);
	const auto back = denormalize(normalize(raw));
	for (std::size_t i = 0; i < raw.size(); ++i)
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			EXPECT_NEAR(back[i].values[k], raw[i].values[k], 1e-12 * (1.0 + std::abs(raw[i].values[k])));
}

TEST(Normalize, Idempotent)
{
	const auto once = normalize(random_trace(300, 9));
	const auto twice = normalize(once);
	for (std::size_t i = 0; i < once.size(); ++i)
		for (std::size_t k = 0; k < kFeatureCount; ++k)
			EXPECT_NEAR(twice[i].values[k], once[i].values[k], 1e-12);
	for (std::size_t k = 0; k < kFeatureCount; ++k) {
		EXPECT_NEAR(twice.norm().shift[k], once.norm().shift[k], 1e-12 * (1.0 + std::abs(once.norm().shift[k])));
		EXPECT_NEAR(twice.norm().scale[k], once.norm().scale[k], 1e-12 * once.norm().scale[k]);
	}
}

TEST(Windows, TwentySamplesGiveOnePair)
{
	const auto t = random_trace(20, 1);
	const auto w = make_windows(t);
	ASSERT_EQ(w.size(), 1u);
	EXPECT_EQ(w[0].input.start, 1);
	EXPECT_EQ(w[0].target.start, 11);
	EXPECT_EQ(w[0].input.values(0, 0), t[0].values[0]);
	EXPECT_EQ(w[0].target.values(9, 8), t[19].values[8]);
}

TEST(Windows, ThirtySamplesGiveTwoPairs) { EXPECT_EQ(make_windows(random_trace(30, 2)).size(), 2u); }

TEST(Windows, NineteenIsTooShort)
{
	EXPECT_THROW(make_windows(random_trace(19, 3)), IngestError);
}

TEST(Windows, TargetsTileWithoutOverlap)
{
	for (std::size_t n : {20u, 37u, 100u, 101u}) {
		const auto t = random_trace(n, n);
		const auto w = make_windows(t);
		std::int64_t expect = 11;
		for (const auto& p : w) {
			EXPECT_GE(p.input.start, 1);
			EXPECT_EQ(p.input.start + 10, p.target.start);
			EXPECT_LE(p.target.start + 9, static_cast<std::int64_t>(n));
			EXPECT_EQ(p.target.start, expect);
			expect += 10;
		}
		EXPECT_EQ(w.size(), (n - 10) / 10);
	}
}

TEST(Synthetic, Deterministic)
{
	EXPECT_EQ(generate_synthetic(SyntheticKind::Sine, 300, 0.0, 42), generate_synthetic(SyntheticKind::Sine, 300, 0.0, 42));
	EXPECT_EQ(generate_synthetic(SyntheticKind::Tap, 300, 0.1, 42), generate_synthetic(SyntheticKind::Tap, 300, 0.1, 42));
	EXPECT_FALSE(generate_synthetic(SyntheticKind::Tap, 300, 0.1, 42) ==
	             generate_synthetic(SyntheticKind::Tap, 300, 0.1, 43));
}

TEST(Synthetic, SineMatchesClosedForm)
{
	const std::uint64_t seed = 77;
	const auto t = generate_synthetic(SyntheticKind::Sine, 500, 0.0, seed);
	const auto m = SyntheticMotion::draw(SyntheticKind::Sine, Side::Human, seed);
	for (const auto& s : t.samples()) {
		for (std::size_t j = 0; j < 3; ++j) {
			const double arg = m.omega[j] * static_cast<double>(s.t) + m.phase[j];
			const double p = m.amp[j] * std::sin(arg);
			const double v = m.amp[j] * m.omega[j] / m.dt * std::cos(arg);
			EXPECT_NEAR(s.values[6 + j], p, 1e-12);
			EXPECT_NEAR(s.values[3 + j], v, 1e-12);
			EXPECT_NEAR(s.values[j], -m.stiffness * p - m.damping * v, 1e-12);
		}
	}
}

TEST(Synthetic, NoiseLevel)
{
	const std::uint64_t seed = 5;
	const auto clean = generate_synthetic(SyntheticKind::Drag, 10000, 0.0, seed);
	const auto noisy = generate_synthetic(SyntheticKind::Drag, 10000, 0.1, seed);
	for (std::size_t k = 0; k < kFeatureCount; ++k) {
		double mean = 0.0, ss = 0.0;
		for (std::size_t i = 0; i < clean.size(); ++i)
			mean += noisy[i].values[k] - clean[i].values[k];
		mean /= 10000.0;
		for (std::size_t i = 0; i < clean.size(); ++i) {
			const double d = noisy[i].values[k] - clean[i].values[k] - mean;
			ss += d * d;
		}
		EXPECT_NEAR(std::sqrt(ss / 9999.0), 0.1, 0.005) << kFeatureNames[k];
	}
}
