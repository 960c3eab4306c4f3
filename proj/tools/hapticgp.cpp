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

// Command-line driver: ingest | train | shapley | predict | bench.
//
// Every run writes into its own directory under the output root
// ($HAPTICGP_OUTPUT_ROOT, default ./runs) together with config.json, the
// effective parameters. `--config <run>/config.json` replays a run; flags
// given on the command line override the file.

#include <hapticgp.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hapticgp;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kIngestFailure = 2, kDivergent = 3, kEvaluatorFailure = 4, kAllCellsFailed = 5 };

int verbosity = 1;

void info(const std::string& msg)
{
	if (verbosity > 0)
		std::cout << msg << '\n';
}

std::string quoted(std::string s)
{
	for (auto& c : s)
		if (c == '"' || c == '\n')
			c = '\'';
	return '"' + s + '"';
}

/// Typed parameter table; values come from flags, then --config, then defaults.
class Params
{
public:
	void add(CLI::App* app, const std::string& name, json def, const std::string& help)
	{
		auto e = std::make_unique<Entry>();
		e->name = name;
		e->def = std::move(def);
		const std::string flag = "--" + dashed(name);
		if (e->def.is_boolean())
			e->opt = app->add_flag(flag + ",!--no-" + dashed(name), e->flag, help);
		else
			e->opt = app->add_option(flag, e->text, help + " [" + e->def.dump() + "]");
		entries_.push_back(std::move(e));
	}

	json resolve(const json& base) const
	{
		json out = json::object();
		for (const auto& e : entries_) {
			if (e->opt->count() > 0)
				out[e->name] = convert(*e);
			else if (base.contains(e->name))
				out[e->name] = base.at(e->name);
			else
				out[e->name] = e->def;
		}
		return out;
	}

private:
	struct Entry
	{
		std::string name;
		json def;
		CLI::Option* opt = nullptr;
		std::string text;
		bool flag = false;
	};

	static std::string dashed(std::string s)
	{
		std::replace(s.begin(), s.end(), '_', '-');
		return s;
	}

	static json convert(const Entry& e)
	{
		if (e.def.is_boolean())
			return e.flag;
		try {
			if (e.def.is_number_unsigned()) {
				if (!e.text.empty() && e.text.front() == '-')
					throw std::invalid_argument("negative");
				return static_cast<std::uint64_t>(std::stoull(e.text));
			}
			if (e.def.is_number_integer())
				return static_cast<std::int64_t>(std::stoll(e.text));
			if (e.def.is_number_float())
				return std::stod(e.text);
		} catch (const std::exception&) {
			throw CLI::ValidationError("--" + dashed(e.name), "expected a number, got '" + e.text + "'");
		}
		return e.text;
	}

	std::vector<std::unique_ptr<Entry>> entries_;
};

struct Global
{
	std::string output_root;
	std::string run_dir;
	std::string config;
	std::size_t threads = 0;
};

struct Command
{
	std::string name;
	CLI::App* app = nullptr;
	Params params;
};

fs::path make_run_dir(const Global& g, const std::string& command)
{
	if (!g.run_dir.empty()) {
		fs::create_directories(g.run_dir);
		return g.run_dir;
	}
	fs::path root = g.output_root;
	if (root.empty()) {
		const char* env = std::getenv("HAPTICGP_OUTPUT_ROOT");
		root = env && *env ? env : "runs";
	}
	const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
	std::tm tm{};
	gmtime_r(&now, &tm);
	std::ostringstream stamp;
	stamp << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
	fs::path dir = root / stamp.str();
	for (int n = 2; fs::exists(dir); ++n)
		dir = root / (stamp.str() + "-" + std::to_string(n));
	fs::create_directories(dir);
	return dir;
}

void write_json(const fs::path& p, const json& j)
{
	std::ofstream out(p, std::ios::binary);
	if (!out)
		throw std::runtime_error("cannot write " + p.string());
	out << j.dump(2) << '\n';
}

json read_json(const fs::path& p)
{
	std::ifstream in(p, std::ios::binary);
	if (!in)
		throw std::runtime_error("cannot read " + p.string());
	return json::parse(in);
}

// ---------------------------------------------------------------------------
// Shared input handling

void add_trace_params(CLI::App* app, Params& p, std::size_t length)
{
	p.add(app, "trace", "", "trace CSV (canonical or raw)");
	p.add(app, "schema", "", "JSON column mapping for raw CSVs");
	p.add(app, "synthetic", "", "generate a trace instead: sine | drag | tap");
	p.add(app, "length", static_cast<std::uint64_t>(length), "synthetic trace length");
	p.add(app, "noise", 0.02, "synthetic noise standard deviation");
	p.add(app, "side", "human", "human | robot");
	p.add(app, "seed", std::uint64_t{1}, "master seed");
}

Trace load_trace(const json& p)
{
	const auto side = side_from_string(p.at("side").get<std::string>());
	const auto synthetic = p.at("synthetic").get<std::string>();
	const auto path = p.at("trace").get<std::string>();
	if (!synthetic.empty() && !path.empty())
		throw std::invalid_argument("give either --trace or --synthetic, not both");
	if (!synthetic.empty())
		return generate_synthetic(synthetic_kind_from_string(synthetic), p.at("length").get<std::size_t>(),
		                          p.at("noise").get<double>(), p.at("seed").get<std::uint64_t>(), side);
	if (path.empty())
		throw std::invalid_argument("no input: give --trace or --synthetic");
	const auto schema_path = p.at("schema").get<std::string>();
	const Schema schema = schema_path.empty() ? Schema::canonical() : Schema::from_json(read_json(schema_path));
	return parse_trace(fs::path(path), schema, side);
}

/// Standardizes on the first `fraction` of a raw trace; already normalized traces pass through.
Trace standardize(const Trace& trace, double fraction)
{
	if (!trace.norm().is_identity())
		return trace;
	const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(trace.size())));
	return normalize(trace, normalize(trace.slice(0, n)).norm());
}

FeatureSubset parse_subset(const json& p, std::size_t universe)
{
	const auto file = p.at("subset_file").get<std::string>();
	if (!file.empty()) {
		const auto j = read_json(file);
		return FeatureSubset::of(j.at("indices").get<std::vector<std::size_t>>(), universe);
	}
	const auto text = p.at("subset").get<std::string>();
	if (text.empty() || text == "all")
		return FeatureSubset::all(universe);
	std::vector<std::size_t> idx;
	std::stringstream ss(text);
	std::string item;
	while (std::getline(ss, item, ',')) {
		const int k = feature_index(item);
		if (k >= 0)
			idx.push_back(static_cast<std::size_t>(k));
		else
			idx.push_back(std::stoul(item));
	}
	for (auto i : idx)
		if (i >= universe)
			throw std::invalid_argument("subset index " + std::to_string(i) + " out of range");
	return FeatureSubset::of(idx, universe);
}

std::vector<std::string> split_list(const std::string& s)
{
	std::vector<std::string> out;
	std::stringstream ss(s);
	std::string item;
	while (std::getline(ss, item, ','))
		if (!item.empty())
			out.push_back(item);
	return out;
}

json norm_json(const Normalization& n) { return {{"shift", n.shift}, {"scale", n.scale}}; }

Normalization norm_from_json(const json& j)
{
	Normalization n;
	n.shift = j.at("shift").get<FeatureVector>();
	n.scale = j.at("scale").get<FeatureVector>();
	return n;
}

// ---------------------------------------------------------------------------
// ingest

int cmd_ingest(const json& p, const fs::path& dir)
{
	Trace trace = load_trace(p);
	const auto raw = trace.norm().is_identity() ? trace : denormalize(trace);
	std::cout << "rows=" << raw.size() << " features=" << kFeatureCount << '\n';
	const auto m = raw.matrix();
	for (std::size_t k = 0; k < kFeatureCount; ++k) {
		const auto col = m.col(static_cast<Eigen::Index>(k));
		const double mean = col.mean();
		const double sd = std::sqrt((col.array() - mean).square().mean());
		std::cout << kFeatureNames[k] << " mean=" << detail::format_double(mean) << " std=" << detail::format_double(sd)
		          << " min=" << detail::format_double(col.minCoeff()) << " max=" << detail::format_double(col.maxCoeff())
		          << '\n';
	}
	if (p.at("normalize").get<bool>())
		trace = normalize(raw);
	write_trace(dir / "trace.csv", trace);
	info("wrote " + (dir / "trace.csv").string());
	return kOk;
}

// ---------------------------------------------------------------------------
// train

std::vector<TrainingExample> oracle_examples(const std::vector<RegressionPair>& pairs, const FeatureSubset& subset,
                                             const MultiOutputGp& oracle)
{
	std::vector<TrainingExample> out;
	out.reserve(pairs.size());
	for (const auto& pr : pairs) {
		TrainingExample ex;
		ex.input = encode_window(pr.window, subset);
		ex.target = oracle.predict(ex.input);
		out.push_back(std::move(ex));
	}
	return out;
}

int cmd_train(json& p, const fs::path& dir)
{
	const double fraction = p.at("train_fraction").get<double>();
	const Trace trace = standardize(load_trace(p), fraction);
	const auto window = p.at("window").get<std::size_t>();
	const auto n_train = static_cast<std::size_t>(fraction * static_cast<double>(trace.size()));
	if (n_train <= window + 1)
		throw PipelineError(PipelineError::Kind::TooShort, "training split too short for the window");
	const auto pairs = regression_pairs(trace.slice(0, n_train), window);
	const auto subset = parse_subset(p, kFeatureCount);

	std::vector<RegressionPair> oracle_pairs;
	for (auto i : detail::strided(0, pairs.size(), p.at("oracle_pairs").get<std::size_t>()))
		oracle_pairs.push_back(pairs[i]);
	GpFitOptions fit;
	fit.max_evaluations = p.at("fit_evaluations").get<int>();
	fit.optimize = fit.max_evaluations > 0;
	fit.step = 0.5;
	const auto oracle = fit_oracle(oracle_pairs, subset, {}, fit);
	write_json(dir / "gp.json", oracle.to_json());

	const auto loss_name = p.at("loss").get<std::string>();
	if (loss_name != "jsd" && loss_name != "mse")
		throw std::invalid_argument("--loss must be jsd or mse");
	std::vector<TrainingExample> examples;
	if (loss_name == "jsd") {
		examples = oracle_examples(pairs, subset, oracle);
	} else {
		for (const auto& pr : pairs) {
			TrainingExample ex;
			ex.input = encode_window(pr.window, subset);
			for (double v : pr.next)
				ex.target.push_back({v, 1.0});
			examples.push_back(std::move(ex));
		}
	}

	const auto input_dim = window * subset.size();
	const auto arch = architecture_from_string(p.at("arch").get<std::string>());
	NetConfig nc = arch == Architecture::FullyConnected ? NetConfig::fully_connected(input_dim)
	                                                    : NetConfig::residual(input_dim);
	if (p.at("depth").get<std::size_t>() == 0)
		p["depth"] = nc.depth;
	if (p.at("width").get<std::size_t>() == 0)
		p["width"] = nc.width;
	if (p.at("dropout").get<double>() < 0.0)
		p["dropout"] = nc.dropout_p;
	nc.depth = p.at("depth").get<std::size_t>();
	nc.width = p.at("width").get<std::size_t>();
	nc.dropout_p = p.at("dropout").get<double>();
	TrainConfig tc;
	tc.lr = p.at("lr").get<double>();
	tc.momentum = p.at("momentum").get<double>();
	tc.batch_size = p.at("batch").get<std::size_t>();
	tc.epochs = p.at("epochs").get<std::size_t>();
	const auto seed = p.at("seed").get<std::uint64_t>();
	tc.seed = detail::mix64(seed + 17);
	tc.loss = loss_name == "jsd" ? LossKind::Jsd : LossKind::SquaredError;

	TrainedNet net;
	try {
		net = train(TrainedNet::init(nc, detail::mix64(seed + 29)), examples, tc, [](std::size_t epoch, double loss) {
			if (verbosity > 1)
				std::cerr << "epoch " << epoch << " loss " << detail::format_double(loss) << '\n';
			return true;
		});
	} catch (const NnError& e) {
		if (e.kind() == NnError::Kind::DivergentTraining) {
			std::cerr << "error: kind=DivergentTraining epoch=" << e.epoch() << " message=" << quoted(e.what()) << '\n';
			return kDivergent;
		}
		throw;
	}

	json model = net.to_json();
	model["window"] = window;
	model["subset"] = subset.indices();
	model["normalization"] = norm_json(trace.norm());
	model["loss"] = loss_name;
	write_json(dir / "model.json", model);
	{
		std::ofstream log(dir / "loss_log.csv", std::ios::binary);
		write_loss_log(log, net, loss_name == "jsd" ? "mean_jsd" : "mean_squared_error");
	}
	const auto eval_examples = oracle_examples(pairs, subset, oracle);
	const double eval_jsd = mean_loss(net, eval_examples, LossKind::Jsd) / static_cast<double>(kFeatureCount);
	write_json(dir / "train_summary.json", {{"examples", examples.size()},
	                                        {"epochs", net.train_log().size()},
	                                        {"final_train_loss", net.train_log().empty() ? 0.0 : net.train_log().back()},
	                                        {"mean_jsd_vs_gp", eval_jsd}});
	std::cout << "epochs=" << net.train_log().size() << " mean_jsd_vs_gp=" << detail::format_double(eval_jsd) << '\n';
	return kOk;
}

// ---------------------------------------------------------------------------
// shapley

int cmd_shapley(const json& p, const fs::path& dir, std::size_t threads)
{
	const double fraction = p.at("train_fraction").get<double>();
	const Trace trace = standardize(load_trace(p), fraction);
	const auto n_train = static_cast<std::size_t>(fraction * static_cast<double>(trace.size()));
	const auto window = p.at("window").get<std::size_t>();
	const auto other_path = p.at("other_trace").get<std::string>();
	FeatureDataset data;
	if (other_path.empty()) {
		data = FeatureDataset::same_side(trace.slice(0, n_train), window);
	} else {
		const auto other_side = trace.side() == Side::Human ? Side::Robot : Side::Human;
		const auto other = standardize(parse_trace(fs::path(other_path), Schema::canonical(), other_side), fraction);
		const auto n = std::min(n_train, other.size());
		data = FeatureDataset::cross_side(trace.slice(0, n), other.slice(0, n), window);
	}
	data.train_fraction = 0.7;
	EvaluatorBudget budget;
	budget.max_train_pairs = p.at("train_pairs").get<std::size_t>();
	budget.max_validation_pairs = p.at("validation_pairs").get<std::size_t>();
	budget.optimizer_evaluations = p.at("fit_evaluations").get<int>();
	budget.threads = threads;

	const auto v = make_feature_value_fn(data, budget);
	auto method = p.at("method").get<std::string>();
	if (method == "auto")
		method = data.features() <= 12 ? "exact" : "sampled";
	ShapleyReport report;
	try {
		if (method == "exact")
			report = shapley_exact(v, threads);
		else if (method == "sampled")
			report = shapley_sampled(v, p.at("perms").get<std::size_t>(), p.at("seed").get<std::uint64_t>());
		else
			throw std::invalid_argument("--method must be exact, sampled or auto");
	} catch (const ShapleyError& e) {
		if (e.kind() != ShapleyError::Kind::EvaluatorFailure)
			throw;
		std::cerr << "error: kind=EvaluatorFailure mask=" << (e.mask() ? std::to_string(*e.mask()) : "?")
		          << " message=" << quoted(e.what()) << '\n';
		return kEvaluatorFailure;
	}
	json rj = report.to_json();
	rj["features"] = data.input_names;
	write_json(dir / "shapley.json", rj);

	const auto k = p.at("k").get<std::size_t>();
	const auto top = select_top_k(report, k);
	json sj{{"format", "hapticgp-subset"}, {"version", 1}, {"k", k}, {"universe", data.features()}};
	sj["indices"] = top.indices();
	std::vector<std::string> names;
	for (auto i : top.indices())
		names.push_back(data.input_names[i]);
	sj["features"] = names;
	write_json(dir / "subset.json", sj);

	for (std::size_t a = 0; a < report.phi.size(); ++a)
		std::cout << data.input_names[a] << " phi=" << detail::format_double(report.phi[a]) << '\n';
	std::cout << "evaluations=" << report.evaluations << " selected=";
	for (std::size_t i = 0; i < names.size(); ++i)
		std::cout << (i ? "," : "") << names[i];
	std::cout << '\n';
	return kOk;
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const json& p, const fs::path& dir)
{
	const double fraction = p.at("train_fraction").get<double>();
	const auto predictor_name = p.at("predictor").get<std::string>();
	if (predictor_name != "gp" && predictor_name != "nn")
		throw std::invalid_argument("--predictor must be gp or nn");
	std::optional<TrainedNet> net;
	std::optional<FeatureSubset> model_subset;
	Trace trace = load_trace(p);
	if (predictor_name == "nn") {
		const auto path = p.at("model").get<std::string>();
		if (path.empty())
			throw std::invalid_argument("--predictor nn needs --model");
		const auto mj = read_json(path);
		net = TrainedNet::from_json(mj);
		model_subset = FeatureSubset::of(mj.at("subset").get<std::vector<std::size_t>>(), kFeatureCount);
		if (trace.norm().is_identity() && mj.contains("normalization"))
			trace = normalize(trace, norm_from_json(mj.at("normalization")));
	}
	trace = standardize(trace, fraction);

	EpisodeConfig ecfg;
	ecfg.window = p.at("window").get<std::size_t>();
	ecfg.block = p.at("block").get<std::size_t>();
	ecfg.gp_capacity = p.at("gp_capacity").get<std::size_t>();
	ecfg.refit_evaluations = p.at("refit_evaluations").get<int>();
	const auto subset = model_subset ? *model_subset : parse_subset(p, kFeatureCount);

	const auto n_train = static_cast<std::size_t>(fraction * static_cast<double>(trace.size()));
	if (n_train <= ecfg.window + 1 || n_train >= trace.size())
		throw PipelineError(PipelineError::Kind::TooShort, "trace too short for the train/episode split");
	const Trace train = trace.slice(0, n_train);
	const Trace test = trace.slice(n_train, trace.size() - n_train);
	const auto pairs = regression_pairs(train, ecfg.window);
	GpFitOptions fit;
	fit.max_evaluations = p.at("fit_evaluations").get<int>();
	fit.optimize = fit.max_evaluations > 0;
	fit.step = 0.5;
	const auto gp = fit_oracle(pairs, subset, {}, fit, ecfg.gp_capacity);

	const auto loss_model = LossModel::parse(p.at("loss_model").get<std::string>());
	const auto arrivals = make_arrivals(test, loss_model, p.at("seed").get<std::uint64_t>(), ecfg.window);
	const Predictor predictor = net ? Predictor{NnPredictor{&*net}} : Predictor{GpPredictor{}};
	auto result = run_episode(test, predictor, subset, arrivals, gp, pairs, ecfg);
	result.loss_model = loss_model.to_string();

	{
		std::ofstream out(dir / "episode.csv", std::ios::binary);
		result.write_csv(out, false);
	}
	{
		std::ofstream out(dir / "timing.csv", std::ios::binary);
		out << "# hapticgp-timing v1\nindex,time_ns\n";
		for (const auto& r : result.records)
			out << r.index << ',' << r.time_ns << '\n';
	}
	auto summary = result.summary_json(false);
	const auto score = score_episode(result, test, ecfg.block);
	summary["accuracy"] = score.accuracy;
	summary["mean_accuracy"] = score.mean_accuracy;
	summary["horizon_error"] = score.horizon_error;
	write_json(dir / "summary.json", summary);

	std::size_t self_fed = 0;
	for (const auto& b : result.blocks)
		self_fed += b.self_fed ? 1 : 0;
	std::cout << "predicted=" << result.predicted() << " refits=" << result.refits << " self_fed_blocks=" << self_fed
	          << " mean_accuracy=" << detail::format_double(score.mean_accuracy) << '\n';
	return kOk;
}

// ---------------------------------------------------------------------------
// bench

BenchConfig bench_config(const json& p, std::size_t threads)
{
	BenchConfig c;
	const auto grid = p.at("grid").get<std::string>();
	if (!grid.empty()) {
		c = BenchConfig::from_json(read_json(grid));
	} else {
		for (const auto& d : split_list(p.at("datasets").get<std::string>())) {
			const auto eq = d.find('=');
			if (eq == std::string::npos) {
				c.datasets.push_back(DatasetSpec::synthetic_kind(synthetic_kind_from_string(d),
				                                                 p.at("length").get<std::size_t>(),
				                                                 p.at("noise").get<double>()));
			} else {
				// name=human.csv:robot.csv
				DatasetSpec ds;
				ds.name = d.substr(0, eq);
				const auto files = d.substr(eq + 1);
				const auto colon = files.find(':');
				if (colon == std::string::npos)
					throw std::invalid_argument("dataset '" + d + "' must be name=human.csv:robot.csv");
				ds.human_path = files.substr(0, colon);
				ds.robot_path = files.substr(colon + 1);
				c.datasets.push_back(ds);
			}
		}
		c.architectures = split_list(p.at("archs").get<std::string>());
		for (const auto& m : split_list(p.at("methods").get<std::string>()))
			c.methods.push_back(method_from_string(m));
		c.sides.clear();
		for (const auto& s : split_list(p.at("sides").get<std::string>()))
			c.sides.push_back(side_from_string(s));
		c.runs = p.at("runs").get<std::size_t>();
		c.seed = p.at("seed").get<std::uint64_t>();
		c.k = p.at("k").get<std::size_t>();
		c.loss_model = p.at("loss_model").get<std::string>();
		c.nn_depth = p.at("nn_depth").get<std::size_t>();
		c.nn_width = p.at("nn_width").get<std::size_t>();
		c.nn_epochs = p.at("nn_epochs").get<std::size_t>();
		c.timing_samples = p.at("timing_samples").get<std::size_t>();
		c.timing_warmup = p.at("timing_warmup").get<std::size_t>();
		c.parallel_timing = p.at("parallel_timing").get<bool>();
	}
	c.threads = threads;
	return c;
}

int cmd_bench(const json& p, const fs::path& dir, std::size_t threads, json& effective)
{
	const auto cfg = bench_config(p, threads);
	effective["grid"] = cfg.to_json();
	write_json(dir / "config.json", effective);
	const auto format_name = p.at("format").get<std::string>();
	ExportFormat format = ExportFormat::Both;
	if (format_name == "csv")
		format = ExportFormat::Csv;
	else if (format_name == "json")
		format = ExportFormat::Json;
	else if (format_name != "both")
		throw std::invalid_argument("--format must be csv, json or both");

	const auto report = run_matrix(cfg, [](std::size_t i, std::size_t n, const CellResult& c) {
		std::ostringstream line;
		line << "cell " << i + 1 << '/' << n << ' ' << c.dataset << ' ' << c.architecture << ' ' << to_string(c.method)
		     << ' ' << to_string(c.side);
		if (c.failed)
			line << " FAILED: " << c.error;
		else
			line << " accuracy=" << detail::format_double(c.overall.mean);
		info(line.str());
	});
	export_report(report, format, dir);
	std::size_t failed = 0;
	for (const auto& c : report.cells)
		failed += c.failed ? 1 : 0;
	std::cout << "cells=" << report.cells.size() << " failed=" << failed << '\n';
	if (!report.cells.empty() && failed == report.cells.size())
		return kAllCellsFailed;
	return kOk;
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"hapticgp: GP-oracle haptic signal prediction toolkit"};
	app.require_subcommand(1);
	Global g;
	app.add_option("--output-root", g.output_root, "directory holding run directories [$HAPTICGP_OUTPUT_ROOT or ./runs]");
	app.add_option("--run-dir", g.run_dir, "write into exactly this directory");
	app.add_option("--config", g.config, "replay the parameters of a config.json");
	app.add_option("--threads", g.threads, "worker threads [machine parallelism]");
	app.add_option("--verbosity", verbosity, "0 quiet, 1 normal, 2 debug [1]");

	std::vector<std::unique_ptr<Command>> commands;
	auto make = [&](const std::string& name, const std::string& help) {
		auto c = std::make_unique<Command>();
		c->name = name;
		c->app = app.add_subcommand(name, help);
		c->app->fallthrough(); // global options may follow the subcommand
		commands.push_back(std::move(c));
		return commands.back().get();
	};

	auto* ingest = make("ingest", "parse and normalize a raw CSV, or generate a synthetic trace");
	add_trace_params(ingest->app, ingest->params, 400);
	ingest->params.add(ingest->app, "normalize", true, "standardize every channel");

	auto* train_cmd = make("train", "fit the GP oracle and train a network on its predictive distributions");
	add_trace_params(train_cmd->app, train_cmd->params, 2010);
	auto& tp = train_cmd->params;
	tp.add(train_cmd->app, "train_fraction", 1.0, "leading fraction of the trace used for training");
	tp.add(train_cmd->app, "window", std::uint64_t{kDefaultWindow}, "samples per input window");
	tp.add(train_cmd->app, "subset", "all", "input channels: all, or names/indices like fx,vy,pz");
	tp.add(train_cmd->app, "subset_file", "", "subset.json written by the shapley command");
	tp.add(train_cmd->app, "oracle_pairs", std::uint64_t{150}, "training pairs the GP oracle is fit on");
	tp.add(train_cmd->app, "fit_evaluations", std::int64_t{60}, "GP hyperparameter optimizer evaluations");
	tp.add(train_cmd->app, "arch", "fc", "fc | resnet");
	tp.add(train_cmd->app, "depth", std::uint64_t{0}, "hidden layers or residual blocks (0 = architecture default)");
	tp.add(train_cmd->app, "width", std::uint64_t{0}, "hidden width (0 = architecture default)");
	tp.add(train_cmd->app, "dropout", -1.0, "dropout probability (negative = architecture default)");
	tp.add(train_cmd->app, "epochs", std::uint64_t{100}, "training epochs");
	tp.add(train_cmd->app, "lr", 0.01, "learning rate");
	tp.add(train_cmd->app, "momentum", 0.9, "SGD momentum");
	tp.add(train_cmd->app, "batch", std::uint64_t{32}, "minibatch size");
	tp.add(train_cmd->app, "loss", "jsd", "jsd (GP targets) | mse (point targets)");

	auto* shapley_cmd = make("shapley", "feature attribution of the input channels");
	add_trace_params(shapley_cmd->app, shapley_cmd->params, 400);
	auto& sp = shapley_cmd->params;
	sp.add(shapley_cmd->app, "other_trace", "", "other side's trace; attributes all 18 channels");
	sp.add(shapley_cmd->app, "train_fraction", 0.5, "leading fraction of the trace used");
	sp.add(shapley_cmd->app, "window", std::uint64_t{kDefaultWindow}, "samples per input window");
	sp.add(shapley_cmd->app, "method", "auto", "exact | sampled | auto");
	sp.add(shapley_cmd->app, "perms", std::uint64_t{1000}, "permutations for the sampled estimator");
	sp.add(shapley_cmd->app, "k", std::uint64_t{3}, "features to select");
	sp.add(shapley_cmd->app, "train_pairs", std::uint64_t{80}, "GP training pairs per subset");
	sp.add(shapley_cmd->app, "validation_pairs", std::uint64_t{120}, "validation pairs per subset");
	sp.add(shapley_cmd->app, "fit_evaluations", std::int64_t{0}, "optimizer evaluations per subset fit");

	auto* predict_cmd = make("predict", "run one inference episode");
	add_trace_params(predict_cmd->app, predict_cmd->params, 400);
	auto& pp = predict_cmd->params;
	pp.add(predict_cmd->app, "predictor", "gp", "gp | nn");
	pp.add(predict_cmd->app, "model", "", "model.json written by the train command");
	pp.add(predict_cmd->app, "subset", "all", "input channels: all, or names/indices like fx,vy,pz");
	pp.add(predict_cmd->app, "subset_file", "", "subset.json written by the shapley command");
	pp.add(predict_cmd->app, "loss_model", "none", "none | drop-all | iid-drop:P | burst:LEN:GAP | fixed-delay:D");
	pp.add(predict_cmd->app, "train_fraction", 0.5, "leading fraction used to fit the initial GP");
	pp.add(predict_cmd->app, "window", std::uint64_t{kDefaultWindow}, "samples per input window");
	pp.add(predict_cmd->app, "block", std::uint64_t{kDefaultBlock}, "predictions between refits");
	pp.add(predict_cmd->app, "gp_capacity", std::uint64_t{60}, "most recent pairs each GP fit keeps");
	pp.add(predict_cmd->app, "fit_evaluations", std::int64_t{40}, "optimizer evaluations for the initial GP");
	pp.add(predict_cmd->app, "refit_evaluations", std::int64_t{20}, "optimizer evaluations per refit");

	auto* bench_cmd = make("bench", "run the dataset x architecture x method x side grid");
	auto& bp = bench_cmd->params;
	auto* ba = bench_cmd->app;
	bp.add(ba, "grid", "", "BenchConfig JSON; replaces the grid flags below");
	bp.add(ba, "datasets", "sine,drag,tap", "synthetic kinds or name=human.csv:robot.csv, comma separated");
	bp.add(ba, "length", std::uint64_t{400}, "synthetic trace length");
	bp.add(ba, "noise", 0.02, "synthetic noise standard deviation");
	bp.add(ba, "archs", "gp", "fc, resnet, gp");
	bp.add(ba, "methods", "lefo,gp,gp-sfv", "lefo, gp, gp-sfv");
	bp.add(ba, "sides", "human,robot", "human, robot");
	const BenchConfig bench_defaults;
	bp.add(ba, "runs", std::uint64_t{bench_defaults.runs}, "runs per cell");
	bp.add(ba, "seed", std::uint64_t{1}, "seed of run 0; run r uses seed + r");
	bp.add(ba, "k", std::uint64_t{bench_defaults.k}, "features kept by SFV selection");
	bp.add(ba, "loss_model", "none", "arrival model of every episode");
	bp.add(ba, "nn_depth", std::uint64_t{bench_defaults.nn_depth}, "network depth");
	bp.add(ba, "nn_width", std::uint64_t{bench_defaults.nn_width}, "network width");
	bp.add(ba, "nn_epochs", std::uint64_t{bench_defaults.nn_epochs}, "network epochs");
	bp.add(ba, "timing_samples", std::uint64_t{bench_defaults.timing_samples}, "timed predictions per cell");
	bp.add(ba, "timing_warmup", std::uint64_t{bench_defaults.timing_warmup}, "discarded warm-up predictions");
	bp.add(ba, "parallel_timing", false, "time cells concurrently with other work");
	bp.add(ba, "format", "both", "csv | json | both");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		return app.exit(e);
	}

	Command* cmd = nullptr;
	for (auto& c : commands)
		if (c->app->parsed())
			cmd = c.get();

	try {
		json base = json::object();
		if (!g.config.empty()) {
			const auto cj = read_json(g.config);
			if (cj.value("command", "") != cmd->name)
				throw std::invalid_argument("config " + g.config + " belongs to command '" + cj.value("command", "") +
				                            "'");
			base = cj.at("params");
			if (g.threads == 0 && cj.contains("threads"))
				g.threads = cj.at("threads").get<std::size_t>();
		}
		json params = cmd->params.resolve(base);
		const std::size_t threads = g.threads > 0 ? g.threads : std::max(1u, std::thread::hardware_concurrency());
		const auto dir = make_run_dir(g, cmd->name);
		json effective{{"format", "hapticgp-run"}, {"version", 1}, {"command", cmd->name},
		                {"threads", threads},     {"params", params}};
		info("run directory: " + dir.string());

		int code = kOk;
		if (cmd->name == "ingest")
			code = cmd_ingest(params, dir);
		else if (cmd->name == "train")
			code = cmd_train(params, dir);
		else if (cmd->name == "shapley")
			code = cmd_shapley(params, dir, threads);
		else if (cmd->name == "predict")
			code = cmd_predict(params, dir);
		else
			code = cmd_bench(params, dir, threads, effective);
		effective["params"] = params;
		write_json(dir / "config.json", effective);
		return code;
	} catch (const IngestError& e) {
		std::cerr << "error: kind=" << to_string(e.kind());
		if (!e.column().empty())
			std::cerr << " column=" << e.column();
		if (!e.rows().empty()) {
			std::cerr << " rows=";
			for (std::size_t i = 0; i < e.rows().size(); ++i)
				std::cerr << (i ? ";" : "") << e.rows()[i];
		}
		std::cerr << " message=" << quoted(e.what()) << '\n';
		return kIngestFailure;
	} catch (const std::exception& e) {
		std::cerr << "error: kind=Failure message=" << quoted(e.what()) << '\n';
		return kFailure;
	}
}
