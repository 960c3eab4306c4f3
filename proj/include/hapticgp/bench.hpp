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
 * \file hapticgp/bench.hpp
 *
 * \brief Episode scoring, the (dataset x architecture x method x side)
 *  experiment grid and its CSV/JSON reports.
 */

#ifndef HAPTICGP_BENCH_HPP
#define HAPTICGP_BENCH_HPP

#include <hapticgp/core.hpp>
#include <hapticgp/detail/text.hpp>
#include <hapticgp/gp.hpp>
#include <hapticgp/ingest.hpp>
#include <hapticgp/metrics.hpp>
#include <hapticgp/nn.hpp>
#include <hapticgp/pipeline.hpp>
#include <hapticgp/shapley.hpp>

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace hapticgp {

class BenchError : public Error
{
public:
	enum class Kind { IndexOutOfRange, Io, InvalidConfig };

	BenchError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

	Kind kind() const noexcept { return kind_; }

private:
	Kind kind_;
};

inline constexpr int kBenchSchemaVersion = 1;

struct EpisodeScore
{
	FeatureVector accuracy{};
	double mean_accuracy = 0.0;
	/// Mean absolute error in standardized units (raw error / channel scale), per horizon 1..block.
	std::vector<double> horizon_error;
};

/**
 * Range-normalized accuracy per channel over the scored samples, plus the
 * horizon error curve. Truth is looked up by sample index in `truth`.
 */
inline EpisodeScore score_episode(const EpisodeResult& result, const Trace& truth, std::size_t block = kDefaultBlock)
{
	EpisodeScore s;
	s.horizon_error.assign(block, 0.0);
	if (result.records.empty()) {
		s.accuracy.fill(100.0);
		s.mean_accuracy = 100.0;
		return s;
	}
	std::map<std::int64_t, std::size_t> pos;
	for (std::size_t i = 0; i < truth.size(); ++i)
		pos.emplace(truth[i].t, i);
	const auto& norm = truth.norm();
	std::vector<std::vector<double>> pred(kFeatureCount), real(kFeatureCount);
	std::vector<std::size_t> count(block, 0);
	for (const auto& r : result.records) {
		auto it = pos.find(r.index);
		if (it == pos.end())
			throw BenchError(BenchError::Kind::IndexOutOfRange,
			                 "score_episode: truth has no sample with index " + std::to_string(r.index));
		const auto& v = truth[it->second].values;
		double herr = 0.0;
		for (std::size_t k = 0; k < kFeatureCount; ++k) {
			const double t = norm.to_raw(k, v[k]);
			pred[k].push_back(r.predicted[k]);
			real[k].push_back(t);
			herr += std::abs(r.predicted[k] - t) / norm.scale[k];
		}
		if (r.horizon >= 1 && r.horizon <= block) {
			s.horizon_error[r.horizon - 1] += herr / static_cast<double>(kFeatureCount);
			++count[r.horizon - 1];
		}
	}
	for (std::size_t h = 0; h < block; ++h)
		if (count[h])
			s.horizon_error[h] /= static_cast<double>(count[h]);
	for (std::size_t k = 0; k < kFeatureCount; ++k) {
		s.accuracy[k] = accuracy_percent(pred[k], real[k]);
		s.mean_accuracy += s.accuracy[k];
	}
	s.mean_accuracy /= static_cast<double>(kFeatureCount);
	return s;
}

/// LeFo-style baseline (all features, point-prediction / squared-error), GP oracle, GP oracle + SFV selection.
enum class Method { LeFo, Gp, GpSfv };

inline std::string_view to_string(Method m)
{
	switch (m) {
	case Method::LeFo: return "lefo";
	case Method::Gp: return "gp";
	case Method::GpSfv: return "gp-sfv";
	}
	return "?";
}

inline Method method_from_string(std::string_view s)
{
	if (s == "lefo")
		return Method::LeFo;
	if (s == "gp")
		return Method::Gp;
	if (s == "gp-sfv" || s == "gpsfv" || s == "sfv")
		return Method::GpSfv;
	throw std::invalid_argument("unknown method '" + std::string(s) + "' (expected lefo, gp or gp-sfv)");
}

/// A synthetic kind, or a pair of trace files (one per side).
struct DatasetSpec
{
	std::string name;
	std::optional<SyntheticKind> synthetic;
	std::string human_path;
	std::string robot_path;
	std::size_t length = 400;
	double noise = 0.02;

	static DatasetSpec synthetic_kind(SyntheticKind k, std::size_t length = 400, double noise = 0.02)
	{
		DatasetSpec d;
		d.name = std::string(to_string(k));
		d.synthetic = k;
		d.length = length;
		d.noise = noise;
		return d;
	}

	nlohmann::json to_json() const
	{
		nlohmann::json j{{"name", name}, {"length", length}, {"noise", noise}};
		if (synthetic)
			j["synthetic"] = std::string(to_string(*synthetic));
		else
			j["files"] = {{"human", human_path}, {"robot", robot_path}};
		return j;
	}

	static DatasetSpec from_json(const nlohmann::json& j)
	{
		DatasetSpec d;
		d.name = j.at("name").get<std::string>();
		d.length = j.value("length", d.length);
		d.noise = j.value("noise", d.noise);
		if (j.contains("synthetic"))
			d.synthetic = synthetic_kind_from_string(j.at("synthetic").get<std::string>());
		else {
			d.human_path = j.at("files").at("human").get<std::string>();
			d.robot_path = j.at("files").at("robot").get<std::string>();
		}
		return d;
	}

	friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct BenchConfig
{
	std::vector<DatasetSpec> datasets;
	/// fc | resnet | gp
	std::vector<std::string> architectures;
	std::vector<Method> methods;
	std::vector<Side> sides{Side::Human, Side::Robot};
	std::size_t runs = 10;
	std::uint64_t seed = 1;
	std::size_t window = kDefaultWindow;
	std::size_t block = kDefaultBlock;
	/// Features kept by SFV selection.
	std::size_t k = 3;
	double train_fraction = 0.5;
	std::string loss_model = "none";
	// GP
	std::size_t gp_capacity = 60;
	int fit_evaluations = 40;
	int refit_evaluations = 20;
	std::size_t oracle_pairs = 120;
	// SFV game
	std::size_t sfv_train_pairs = 80;
	std::size_t sfv_validation_pairs = 120;
	// networks
	std::size_t nn_depth = 3;
	std::size_t nn_width = 64;
	std::size_t nn_epochs = 200;
	double nn_lr = 0.01;
	double nn_momentum = 0.9;
	std::size_t nn_batch = 32;
	double nn_dropout = 0.0;
	// timing
	std::size_t timing_warmup = 100;
	std::size_t timing_samples = 1000;
	std::size_t threads = 1;
	/// Let timing run concurrently with other cells (noisier).
	bool parallel_timing = false;

	std::size_t cell_count() const { return datasets.size() * architectures.size() * methods.size() * sides.size(); }

	void validate() const
	{
		for (const auto& a : architectures)
			if (a != "fc" && a != "resnet" && a != "gp")
				throw BenchError(BenchError::Kind::InvalidConfig, "unknown architecture '" + a + "'");
		if (runs == 0 || window == 0 || block == 0)
			throw BenchError(BenchError::Kind::InvalidConfig, "runs, window and block must be positive");
		if (k == 0 || k > kFeatureCount)
			throw BenchError(BenchError::Kind::InvalidConfig, "k must lie in 1..9");
		if (!(train_fraction > 0.0 && train_fraction < 1.0))
			throw BenchError(BenchError::Kind::InvalidConfig, "train_fraction must lie in (0,1)");
		if (timing_samples == 0)
			throw BenchError(BenchError::Kind::InvalidConfig, "timing_samples must be positive");
		LossModel::parse(loss_model);
	}

	/// Everything except `threads`, which never changes results.
	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["datasets"] = nlohmann::json::array();
		for (const auto& d : datasets)
			j["datasets"].push_back(d.to_json());
		j["architectures"] = architectures;
		std::vector<std::string> ms, ss;
		for (auto m : methods)
			ms.emplace_back(to_string(m));
		for (auto s : sides)
			ss.emplace_back(to_string(s));
		j["methods"] = ms;
		j["sides"] = ss;
		j["runs"] = runs;
		j["seed"] = seed;
		j["window"] = window;
		j["block"] = block;
		j["k"] = k;
		j["train_fraction"] = train_fraction;
		j["loss_model"] = loss_model;
		j["gp"] = {{"capacity", gp_capacity},
		           {"fit_evaluations", fit_evaluations},
		           {"refit_evaluations", refit_evaluations},
		           {"oracle_pairs", oracle_pairs}};
		j["sfv"] = {{"train_pairs", sfv_train_pairs}, {"validation_pairs", sfv_validation_pairs}};
		j["nn"] = {{"depth", nn_depth},     {"width", nn_width},       {"epochs", nn_epochs}, {"lr", nn_lr},
		           {"momentum", nn_momentum}, {"batch", nn_batch}, {"dropout", nn_dropout}};
		j["timing"] = {{"warmup", timing_warmup}, {"samples", timing_samples}, {"parallel", parallel_timing}};
		return j;
	}

	static BenchConfig from_json(const nlohmann::json& j)
	{
		BenchConfig c;
		c.datasets.clear();
		for (const auto& d : j.value("datasets", nlohmann::json::array()))
			c.datasets.push_back(DatasetSpec::from_json(d));
		c.architectures = j.value("architectures", c.architectures);
		c.methods.clear();
		for (const auto& m : j.value("methods", std::vector<std::string>{}))
			c.methods.push_back(method_from_string(m));
		if (j.contains("sides")) {
			c.sides.clear();
			for (const auto& s : j.at("sides").get<std::vector<std::string>>())
				c.sides.push_back(side_from_string(s));
		}
		c.runs = j.value("runs", c.runs);
		c.seed = j.value("seed", c.seed);
		c.window = j.value("window", c.window);
		c.block = j.value("block", c.block);
		c.k = j.value("k", c.k);
		c.train_fraction = j.value("train_fraction", c.train_fraction);
		c.loss_model = j.value("loss_model", c.loss_model);
		if (j.contains("gp")) {
			const auto& g = j.at("gp");
			c.gp_capacity = g.value("capacity", c.gp_capacity);
			c.fit_evaluations = g.value("fit_evaluations", c.fit_evaluations);
			c.refit_evaluations = g.value("refit_evaluations", c.refit_evaluations);
			c.oracle_pairs = g.value("oracle_pairs", c.oracle_pairs);
		}
		if (j.contains("sfv")) {
			c.sfv_train_pairs = j.at("sfv").value("train_pairs", c.sfv_train_pairs);
			c.sfv_validation_pairs = j.at("sfv").value("validation_pairs", c.sfv_validation_pairs);
		}
		if (j.contains("nn")) {
			const auto& n = j.at("nn");
			c.nn_depth = n.value("depth", c.nn_depth);
			c.nn_width = n.value("width", c.nn_width);
			c.nn_epochs = n.value("epochs", c.nn_epochs);
			c.nn_lr = n.value("lr", c.nn_lr);
			c.nn_momentum = n.value("momentum", c.nn_momentum);
			c.nn_batch = n.value("batch", c.nn_batch);
			c.nn_dropout = n.value("dropout", c.nn_dropout);
		}
		if (j.contains("timing")) {
			c.timing_warmup = j.at("timing").value("warmup", c.timing_warmup);
			c.timing_samples = j.at("timing").value("samples", c.timing_samples);
			c.parallel_timing = j.at("timing").value("parallel", c.parallel_timing);
		}
		return c;
	}

	std::uint64_t hash() const { return detail::fnv1a(to_json().dump()); }

	friend bool operator==(const BenchConfig& a, const BenchConfig& b) { return a.to_json() == b.to_json(); }
};

/// One grid cell aggregated over its runs.
struct CellResult
{
	std::string dataset;
	std::string architecture;
	Method method = Method::Gp;
	Side side = Side::Human;
	bool failed = false;
	std::string error;
	std::vector<std::uint64_t> seeds;
	std::vector<FeatureVector> run_accuracy;
	std::vector<std::vector<double>> run_horizon;
	/// Input channels used in each run.
	std::vector<std::vector<std::size_t>> run_subsets;
	std::array<MeanStd, kFeatureCount> feature{};
	MeanStd overall;
	std::vector<double> horizon;
	double median_ns = 0.0;
	std::size_t timed = 0;

	std::size_t runs() const { return run_accuracy.size(); }

	/// Fills the aggregates from the per-run values.
	void aggregate()
	{
		std::vector<double> v;
		for (std::size_t k = 0; k < kFeatureCount; ++k) {
			v.clear();
			for (const auto& r : run_accuracy)
				v.push_back(r[k]);
			feature[k] = mean_std(v);
		}
		v.clear();
		for (const auto& r : run_accuracy) {
			double m = 0.0;
			for (double a : r)
				m += a;
			v.push_back(m / static_cast<double>(kFeatureCount));
		}
		overall = mean_std(v);
		horizon.clear();
		if (!run_horizon.empty()) {
			horizon.assign(run_horizon.front().size(), 0.0);
			for (const auto& h : run_horizon)
				for (std::size_t i = 0; i < horizon.size() && i < h.size(); ++i)
					horizon[i] += h[i];
			for (auto& h : horizon)
				h /= static_cast<double>(run_horizon.size());
		}
	}

	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["dataset"] = dataset;
		j["architecture"] = architecture;
		j["method"] = std::string(to_string(method));
		j["side"] = std::string(to_string(side));
		j["failed"] = failed;
		j["error"] = error;
		j["runs"] = runs();
		j["seeds"] = seeds;
		j["run_accuracy"] = run_accuracy;
		j["run_horizon"] = run_horizon;
		j["run_subsets"] = run_subsets;
		nlohmann::json f = nlohmann::json::array();
		for (const auto& m : feature)
			f.push_back({{"mean", m.mean}, {"std", m.std}});
		j["feature"] = std::move(f);
		j["overall"] = {{"mean", overall.mean}, {"std", overall.std}};
		j["horizon"] = horizon;
		j["timing"] = {{"median_ns", median_ns}, {"timed", timed}};
		return j;
	}

	static CellResult from_json(const nlohmann::json& j)
	{
		CellResult c;
		c.dataset = j.at("dataset").get<std::string>();
		c.architecture = j.at("architecture").get<std::string>();
		c.method = method_from_string(j.at("method").get<std::string>());
		c.side = side_from_string(j.at("side").get<std::string>());
		c.failed = j.at("failed").get<bool>();
		c.error = j.at("error").get<std::string>();
		c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
		c.run_accuracy = j.at("run_accuracy").get<std::vector<FeatureVector>>();
		c.run_horizon = j.at("run_horizon").get<std::vector<std::vector<double>>>();
		c.run_subsets = j.at("run_subsets").get<std::vector<std::vector<std::size_t>>>();
		const auto& f = j.at("feature");
		for (std::size_t k = 0; k < kFeatureCount && k < f.size(); ++k)
			c.feature[k] = {f[k].at("mean").get<double>(), f[k].at("std").get<double>()};
		c.overall = {j.at("overall").at("mean").get<double>(), j.at("overall").at("std").get<double>()};
		c.horizon = j.at("horizon").get<std::vector<double>>();
		c.median_ns = j.at("timing").at("median_ns").get<double>();
		c.timed = j.at("timing").at("timed").get<std::size_t>();
		return c;
	}

	friend bool operator==(const CellResult&, const CellResult&) = default;
};

inline std::string machine_info()
{
	std::string s = "threads=" + std::to_string(std::thread::hardware_concurrency());
#if defined(__clang__)
	s += "; compiler=clang " __clang_version__;
#elif defined(__GNUC__)
	s += "; compiler=gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#endif
	s += "; eigen=" + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
	     std::to_string(EIGEN_MINOR_VERSION);
#if defined(__linux__)
	s += "; os=linux";
#elif defined(__APPLE__)
	s += "; os=macos";
#elif defined(_WIN32)
	s += "; os=windows";
#endif
	return s;
}

struct BenchReport
{
	BenchConfig config;
	std::vector<CellResult> cells;
	std::string machine;
	std::string metric = "range-normalized: 100*max(0, 1 - RMSE/range)";

	std::uint64_t config_hash() const { return config.hash(); }

	const CellResult* find(std::string_view dataset, std::string_view arch, Method method, Side side) const
	{
		for (const auto& c : cells)
			if (c.dataset == dataset && c.architecture == arch && c.method == method && c.side == side)
				return &c;
		return nullptr;
	}

	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["format"] = "hapticgp-bench";
		j["version"] = kBenchSchemaVersion;
		j["config"] = config.to_json();
		j["config_hash"] = config_hash();
		j["machine"] = machine;
		j["metric"] = metric;
		j["cells"] = nlohmann::json::array();
		for (const auto& c : cells)
			j["cells"].push_back(c.to_json());
		return j;
	}

	static BenchReport from_json(const nlohmann::json& j)
	{
		if (j.value("format", "") != "hapticgp-bench" || j.value("version", 0) != kBenchSchemaVersion)
			throw BenchError(BenchError::Kind::InvalidConfig, "not a hapticgp-bench v1 document");
		BenchReport r;
		r.config = BenchConfig::from_json(j.at("config"));
		r.machine = j.at("machine").get<std::string>();
		r.metric = j.at("metric").get<std::string>();
		for (const auto& c : j.at("cells"))
			r.cells.push_back(CellResult::from_json(c));
		return r;
	}

	friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/**
 * Median wall-clock time (ns) of `predict` over `count` calls after
 * discarding `warmup` calls; inputs are cycled.
 */
inline double median_prediction_time(const std::function<void(const Eigen::VectorXd&)>& predict,
                                     const std::vector<Eigen::VectorXd>& inputs, std::size_t warmup = 100,
                                     std::size_t count = 1000)
{
	if (inputs.empty() || count == 0)
		return 0.0;
	std::vector<std::int64_t> t;
	t.reserve(count);
	for (std::size_t i = 0; i < warmup + count; ++i) {
		const auto& x = inputs[i % inputs.size()];
		const auto t0 = std::chrono::steady_clock::now();
		predict(x);
		const auto t1 = std::chrono::steady_clock::now();
		if (i >= warmup)
			t.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
	}
	std::sort(t.begin(), t.end());
	const std::size_t n = t.size();
	return n % 2 ? static_cast<double>(t[n / 2]) : 0.5 * static_cast<double>(t[n / 2 - 1] + t[n / 2]);
}

namespace detail {

inline std::uint64_t mix64(std::uint64_t x)
{
	x += 0x9E3779B97F4A7C15ull;
	x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
	x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
	return x ^ (x >> 31);
}

/// Train split and evaluation trace of one dataset/side/run, standardized on the train split.
struct RunData
{
	Trace train;
	Trace test;
};

inline RunData load_run_data(const BenchConfig& cfg, const DatasetSpec& ds, std::size_t ds_index, Side side,
                             std::uint64_t run_seed)
{
	Trace raw;
	if (ds.synthetic)
		raw = generate_synthetic(*ds.synthetic, ds.length, ds.noise, mix64(run_seed ^ (ds_index << 32)), side);
	else
		raw = parse_trace(std::filesystem::path(side == Side::Human ? ds.human_path : ds.robot_path),
		                  Schema::canonical(), side);
	const auto n_train = static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(raw.size()));
	if (n_train < cfg.window + 2 || raw.size() - n_train < cfg.window + cfg.block)
		throw BenchError(BenchError::Kind::InvalidConfig,
		                 "dataset '" + ds.name + "' is too short for the train/evaluation split");
	const Trace train_raw = raw.slice(0, n_train);
	const Trace train = normalize(train_raw);
	Normalization step;
	for (std::size_t k = 0; k < kFeatureCount; ++k) {
		// train.norm() = raw.norm() composed with the split's standardization
		step.scale[k] = train.norm().scale[k] / raw.norm().scale[k];
		step.shift[k] = (train.norm().shift[k] - raw.norm().shift[k]) / raw.norm().scale[k];
	}
	return {train, normalize(raw.slice(n_train, raw.size() - n_train), step)};
}

inline std::vector<std::size_t> subset_vector(const FeatureSubset& s)
{
	std::vector<std::size_t> v;
	for (auto i : s.indices())
		v.push_back(static_cast<std::size_t>(i));
	return v;
}

struct RunOutcome
{
	EpisodeScore score;
	FeatureSubset subset;
	std::function<void(const Eigen::VectorXd&)> predict;
	std::vector<Eigen::VectorXd> inputs;
};

inline std::vector<Eigen::VectorXd> encoded_windows(const Trace& trace, const FeatureSubset& subset, std::size_t window)
{
	std::vector<Eigen::VectorXd> out;
	for (std::size_t t = window; t < trace.size(); ++t)
		out.push_back(encode_window(window_at(trace, t - window, window).values, subset));
	return out;
}

inline RunOutcome run_once(const BenchConfig& cfg, const RunData& data, const std::string& arch, Method method,
                           const FeatureSubset& sfv_subset, std::uint64_t run_seed)
{
	const FeatureSubset subset = method == Method::GpSfv ? sfv_subset : FeatureSubset::all(kFeatureCount);
	const auto pairs = regression_pairs(data.train, cfg.window);
	const auto d = static_cast<Eigen::Index>(cfg.window * subset.size());

	GpFitOptions fit;
	fit.optimize = cfg.fit_evaluations > 0;
	fit.max_evaluations = cfg.fit_evaluations;
	fit.step = 0.5;
	auto gp = std::make_shared<MultiOutputGp>(fit_oracle(pairs, subset, {}, fit, cfg.gp_capacity));

	EpisodeConfig ecfg;
	ecfg.window = cfg.window;
	ecfg.block = cfg.block;
	ecfg.gp_capacity = cfg.gp_capacity;
	ecfg.refit_evaluations = cfg.refit_evaluations;
	const auto arrivals = make_arrivals(data.test, LossModel::parse(cfg.loss_model), run_seed, cfg.window);

	RunOutcome out;
	out.subset = subset;
	out.inputs = encoded_windows(data.test, subset, cfg.window);
	if (arch == "gp") {
		const auto result = run_episode(data.test, GpPredictor{}, subset, arrivals, *gp, pairs, ecfg);
		out.score = score_episode(result, data.test, cfg.block);
		out.predict = [gp](const Eigen::VectorXd& x) { (void)gp->predict(x); };
		return out;
	}

	// Networks learn from strided training windows.
	const auto idx = strided(0, pairs.size(), std::max<std::size_t>(cfg.oracle_pairs, 1) * 4);
	std::vector<TrainingExample> examples;
	std::optional<MultiOutputGp> oracle;
	if (method != Method::LeFo) {
		std::vector<RegressionPair> sub;
		for (auto i : strided(0, pairs.size(), cfg.oracle_pairs))
			sub.push_back(pairs[i]);
		oracle = fit_oracle(sub, subset, gp->hypers(), GpFitOptions{false}, 0);
	}
	for (auto i : idx) {
		TrainingExample ex;
		ex.input = encode_window(pairs[i].window, subset);
		if (oracle) {
			ex.target = oracle->predict(ex.input);
		} else {
			for (double v : pairs[i].next)
				ex.target.push_back({v, 1.0});
		}
		examples.push_back(std::move(ex));
	}
	NetConfig nc;
	nc.arch = architecture_from_string(arch);
	nc.depth = cfg.nn_depth;
	nc.width = cfg.nn_width;
	nc.dropout_p = cfg.nn_dropout;
	nc.input_dim = static_cast<std::size_t>(d);
	TrainConfig tc;
	tc.lr = cfg.nn_lr;
	tc.momentum = cfg.nn_momentum;
	tc.batch_size = cfg.nn_batch;
	tc.epochs = cfg.nn_epochs;
	tc.seed = mix64(run_seed + 17);
	tc.loss = method == Method::LeFo ? LossKind::SquaredError : LossKind::Jsd;
	auto net = std::make_shared<TrainedNet>(train(TrainedNet::init(nc, mix64(run_seed + 29)), examples, tc));
	const auto result = run_episode(data.test, NnPredictor{net.get()}, subset, arrivals, *gp, pairs, ecfg);
	out.score = score_episode(result, data.test, cfg.block);
	out.predict = [net](const Eigen::VectorXd& x) { (void)net->forward(x, Mode::Eval); };
	return out;
}

inline FeatureSubset sfv_select(const BenchConfig& cfg, const Trace& train)
{
	auto data = FeatureDataset::same_side(train, cfg.window);
	data.train_fraction = 0.7;
	EvaluatorBudget budget;
	budget.max_train_pairs = cfg.sfv_train_pairs;
	budget.max_validation_pairs = cfg.sfv_validation_pairs;
	budget.threads = std::max<std::size_t>(cfg.threads, 1);
	const auto v = make_feature_value_fn(data, budget);
	return select_top_k(shapley_exact(v, budget.threads), cfg.k);
}

} // namespace detail

/// Called when a cell finishes: (cell index, total cells, cell).
using CellCallback = std::function<void(std::size_t, std::size_t, const CellResult&)>;

/**
 * Runs every (dataset, architecture, method, side) cell for `runs` seeds.
 * Run r of every cell uses seed + r, so cells are compared on the same data
 * realizations. A failing cell is marked and the grid continues.
 */
inline BenchReport run_matrix(const BenchConfig& cfg, const CellCallback& on_cell = {})
{
	cfg.validate();
	BenchReport report;
	report.config = cfg;
	report.machine = machine_info();

	struct Job
	{
		std::size_t ds;
		std::string arch;
		Method method;
		Side side;
	};
	std::vector<Job> jobs;
	for (std::size_t di = 0; di < cfg.datasets.size(); ++di)
		for (const auto& a : cfg.architectures)
			for (auto m : cfg.methods)
				for (auto s : cfg.sides)
					jobs.push_back({di, a, m, s});
	report.cells.resize(jobs.size());
	if (jobs.empty())
		return report;

	std::vector<std::uint64_t> seeds(cfg.runs);
	for (std::size_t r = 0; r < cfg.runs; ++r)
		seeds[r] = cfg.seed + r;

	// Per (dataset, side, run): data split and SFV subset, computed once and shared.
	struct Shared
	{
		std::once_flag once;
		std::optional<detail::RunData> data;
		std::optional<FeatureSubset> subset;
		std::string error;
	};
	const bool need_sfv = std::find(cfg.methods.begin(), cfg.methods.end(), Method::GpSfv) != cfg.methods.end();
	std::map<std::tuple<std::size_t, int, std::size_t>, Shared> shared;
	for (std::size_t di = 0; di < cfg.datasets.size(); ++di)
		for (auto s : cfg.sides)
			for (std::size_t r = 0; r < cfg.runs; ++r)
				shared[{di, static_cast<int>(s), r}];
	auto get_shared = [&](std::size_t di, Side s, std::size_t r) -> Shared& {
		auto& sh = shared.at({di, static_cast<int>(s), r});
		std::call_once(sh.once, [&] {
			try {
				sh.data = detail::load_run_data(cfg, cfg.datasets[di], di, s, seeds[r]);
				if (need_sfv)
					sh.subset = detail::sfv_select(cfg, sh.data->train);
			} catch (const std::exception& e) {
				sh.error = e.what();
			}
		});
		return sh;
	};

	std::vector<std::function<void(const Eigen::VectorXd&)>> timing_fn(jobs.size());
	std::vector<std::vector<Eigen::VectorXd>> timing_inputs(jobs.size());

	auto run_job = [&](std::size_t j) {
		const auto& job = jobs[j];
		CellResult& cell = report.cells[j];
		cell.dataset = cfg.datasets[job.ds].name;
		cell.architecture = job.arch;
		cell.method = job.method;
		cell.side = job.side;
		cell.seeds = seeds;
		try {
			for (std::size_t r = 0; r < cfg.runs; ++r) {
				auto& sh = get_shared(job.ds, job.side, r);
				if (!sh.error.empty())
					throw Error(sh.error);
				const FeatureSubset sfv = sh.subset.value_or(FeatureSubset::all(kFeatureCount));
				auto outcome = detail::run_once(cfg, *sh.data, job.arch, job.method, sfv, seeds[r]);
				cell.run_accuracy.push_back(outcome.score.accuracy);
				cell.run_horizon.push_back(outcome.score.horizon_error);
				cell.run_subsets.push_back(detail::subset_vector(outcome.subset));
				if (r + 1 == cfg.runs) {
					timing_fn[j] = std::move(outcome.predict);
					timing_inputs[j] = std::move(outcome.inputs);
				}
			}
			cell.aggregate();
		} catch (const std::exception& e) {
			cell.failed = true;
			cell.error = e.what();
			cell.run_accuracy.clear();
			cell.run_horizon.clear();
			cell.run_subsets.clear();
			timing_fn[j] = nullptr;
		}
	};
	auto time_job = [&](std::size_t j) {
		if (!timing_fn[j])
			return;
		report.cells[j].median_ns =
		    median_prediction_time(timing_fn[j], timing_inputs[j], cfg.timing_warmup, cfg.timing_samples);
		report.cells[j].timed = cfg.timing_samples;
		timing_fn[j] = nullptr;
		timing_inputs[j].clear();
	};

	std::mutex cb_mutex;
	std::size_t done = 0;
	auto finish = [&](std::size_t j) {
		if (!on_cell)
			return;
		std::lock_guard<std::mutex> lock(cb_mutex);
		on_cell(++done, jobs.size(), report.cells[j]);
	};

	const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, jobs.size()));
	if (threads == 1) {
		for (std::size_t j = 0; j < jobs.size(); ++j) {
			run_job(j);
			time_job(j);
			finish(j);
		}
		return report;
	}
	std::atomic<std::size_t> next{0};
	std::vector<std::thread> pool;
	for (std::size_t t = 0; t < threads; ++t)
		pool.emplace_back([&] {
			for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
				run_job(j);
				if (cfg.parallel_timing) {
					time_job(j);
					finish(j);
				}
			}
		});
	for (auto& th : pool)
		th.join();
	if (!cfg.parallel_timing)
		for (std::size_t j = 0; j < jobs.size(); ++j) {
			time_job(j);
			finish(j);
		}
	return report;
}

enum class ExportFormat { Csv, Json, Both };

namespace detail {

inline std::ofstream open_report_file(const std::filesystem::path& p)
{
	std::ofstream out(p, std::ios::binary);
	if (!out)
		throw BenchError(BenchError::Kind::Io, "cannot write " + p.string());
	return out;
}

inline std::string cell_prefix(const CellResult& c)
{
	return c.dataset + ',' + c.architecture + ',' + std::string(to_string(c.method)) + ',' +
	       std::string(to_string(c.side));
}

inline std::string fmt(double v) { return format_double(v); }

} // namespace detail

/// Header line carried by every CSV report file.
inline std::string bench_schema_line(std::string_view table)
{
	return "# hapticgp-bench v" + std::to_string(kBenchSchemaVersion) + " " + std::string(table);
}

/**
 * Writes the report tables into `dir` and returns the files written.
 *
 * accuracy_features.csv  per-feature mean/std
 * accuracy_summary.csv   per-cell mean/std over features
 * timing.csv             median per-sample inference time
 * heatmap_<arch>_<method>.csv  (side.feature) x dataset accuracy matrix
 * horizon_error.csv      error per horizon 1..block
 * report.json            everything, with seeds, config hash and machine info
 */
inline std::vector<std::filesystem::path> export_report(const BenchReport& report, ExportFormat format,
                                                        const std::filesystem::path& dir)
{
	namespace fs = std::filesystem;
	std::error_code ec;
	fs::create_directories(dir, ec);
	if (ec || !fs::is_directory(dir))
		throw BenchError(BenchError::Kind::Io, "cannot create report directory " + dir.string());
	std::vector<fs::path> written;

	if (format != ExportFormat::Json) {
		{
			const auto p = dir / "accuracy_features.csv";
			auto out = detail::open_report_file(p);
			out << bench_schema_line("accuracy_features") << '\n';
			out << "dataset,architecture,method,side,feature,mean,std,runs,failed\n";
			for (const auto& c : report.cells)
				for (std::size_t k = 0; k < kFeatureCount; ++k)
					out << detail::cell_prefix(c) << ',' << kFeatureNames[k] << ',' << detail::fmt(c.feature[k].mean)
					    << ',' << detail::fmt(c.feature[k].std) << ',' << c.runs() << ',' << (c.failed ? 1 : 0) << '\n';
			written.push_back(p);
		}
		{
			const auto p = dir / "accuracy_summary.csv";
			auto out = detail::open_report_file(p);
			out << bench_schema_line("accuracy_summary") << '\n';
			out << "dataset,architecture,method,side,mean,std,runs,failed,error\n";
			for (const auto& c : report.cells) {
				std::string err = c.error;
				std::replace(err.begin(), err.end(), ',', ';');
				std::replace(err.begin(), err.end(), '\n', ' ');
				out << detail::cell_prefix(c) << ',' << detail::fmt(c.overall.mean) << ',' << detail::fmt(c.overall.std)
				    << ',' << c.runs() << ',' << (c.failed ? 1 : 0) << ',' << err << '\n';
			}
			written.push_back(p);
		}
		{
			const auto p = dir / "timing.csv";
			auto out = detail::open_report_file(p);
			out << bench_schema_line("timing") << '\n';
			out << "dataset,architecture,method,side,median_ns,median_ms,timed\n";
			for (const auto& c : report.cells)
				out << detail::cell_prefix(c) << ',' << detail::fmt(c.median_ns) << ','
				    << detail::fmt(c.median_ns * 1e-6) << ',' << c.timed << '\n';
			written.push_back(p);
		}
		{
			std::vector<std::string> datasets;
			for (const auto& d : report.config.datasets)
				datasets.push_back(d.name);
			for (const auto& arch : report.config.architectures)
				for (auto m : report.config.methods) {
					const auto p = dir / ("heatmap_" + arch + "_" + std::string(to_string(m)) + ".csv");
					auto out = detail::open_report_file(p);
					out << bench_schema_line("heatmap") << '\n';
					out << "row";
					for (const auto& d : datasets)
						out << ',' << d;
					out << '\n';
					for (auto side : report.config.sides)
						for (std::size_t k = 0; k < kFeatureCount; ++k) {
							out << to_string(side) << '.' << kFeatureNames[k];
							for (const auto& d : datasets) {
								const auto* c = report.find(d, arch, m, side);
								out << ',';
								if (c && !c->failed)
									out << detail::fmt(c->feature[k].mean);
							}
							out << '\n';
						}
					written.push_back(p);
				}
		}
		{
			const auto p = dir / "horizon_error.csv";
			auto out = detail::open_report_file(p);
			out << bench_schema_line("horizon_error") << '\n';
			out << "dataset,architecture,method,side";
			for (std::size_t h = 1; h <= report.config.block; ++h)
				out << ",h" << h;
			out << '\n';
			for (const auto& c : report.cells) {
				out << detail::cell_prefix(c);
				for (std::size_t h = 0; h < report.config.block; ++h) {
					out << ',';
					if (h < c.horizon.size())
						out << detail::fmt(c.horizon[h]);
				}
				out << '\n';
			}
			written.push_back(p);
		}
	}
	if (format != ExportFormat::Csv) {
		const auto p = dir / "report.json";
		auto out = detail::open_report_file(p);
		out << report.to_json().dump(2) << '\n';
		written.push_back(p);
	}
	return written;
}

/// Reads report.json back.
inline BenchReport import_report(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw BenchError(BenchError::Kind::Io, "cannot read " + path.string());
	nlohmann::json j;
	try {
		in >> j;
	} catch (const nlohmann::json::exception& e) {
		throw BenchError(BenchError::Kind::Io, "malformed report " + path.string() + ": " + e.what());
	}
	return BenchReport::from_json(j);
}

} // namespace hapticgp

#endif // HAPTICGP_BENCH_HPP
