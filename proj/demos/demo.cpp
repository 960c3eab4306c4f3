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

// End-to-end walk through the library on a synthetic drag trace: rank the
// input channels, keep the top three, then run a lossy inference episode with
// the GP and with a small network trained on the GP's predictive output.

#include <hapticgp.hpp>

#include <iomanip>
#include <iostream>

using namespace hapticgp;

int main()
{
	const auto trace = normalize(generate_synthetic(SyntheticKind::Drag, 400, 0.02, 11));
	const Trace head = trace.slice(0, 200);
	const Trace test = trace.slice(200, 200);

	auto data = FeatureDataset::same_side(head);
	const auto v = make_feature_value_fn(data);
	const auto phi = shapley_exact(v);
	std::cout << "channel importance:\n";
	for (std::size_t k = 0; k < kFeatureCount; ++k)
		std::cout << "  " << kFeatureNames[k] << ' ' << std::fixed << std::setprecision(3) << phi.phi[k] << '\n';
	const auto subset = select_top_k(phi, 3);
	std::cout << "selected:";
	for (auto k : subset.indices())
		std::cout << ' ' << kFeatureNames[k];
	std::cout << "\n\n";

	const auto pairs = regression_pairs(head);
	GpFitOptions fit;
	fit.max_evaluations = 40;
	fit.step = 0.5;
	const auto gp = fit_oracle(pairs, subset, {}, fit, 60);

	std::vector<TrainingExample> examples;
	for (const auto& p : pairs) {
		TrainingExample ex;
		ex.input = encode_window(p.window, subset);
		ex.target = gp.predict(ex.input);
		examples.push_back(std::move(ex));
	}
	NetConfig nc = NetConfig::fully_connected(kDefaultWindow * subset.size());
	nc.depth = 3;
	nc.width = 64;
	nc.dropout_p = 0.0;
	TrainConfig tc;
	tc.epochs = 60;
	const auto net = train(TrainedNet::init(nc, 1), examples, tc);
	std::cout << "network mean JSD to the GP: " << mean_loss(net, examples) / kFeatureCount << "\n\n";

	const auto arrivals = make_arrivals(test, LossModel::iid_drop(0.3), 5, kDefaultWindow);
	for (const Predictor& pred : {Predictor{GpPredictor{}}, Predictor{NnPredictor{&net}}}) {
		const auto result = run_episode(test, pred, subset, arrivals, gp, pairs);
		const auto score = score_episode(result, test);
		std::size_t self_fed = 0;
		for (const auto& b : result.blocks)
			self_fed += b.self_fed;
		std::cout << result.predictor << ": accuracy " << std::setprecision(2) << score.mean_accuracy << "%, "
		          << result.refits << " refits (" << self_fed << " with no true sample), horizon error";
		for (double h : score.horizon_error)
			std::cout << ' ' << std::setprecision(3) << h;
		std::cout << '\n';
	}
}
