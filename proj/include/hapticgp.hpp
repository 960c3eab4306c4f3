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

#ifndef HAPTICGP_HAPTICGP_HPP
#define HAPTICGP_HAPTICGP_HPP

#include <hapticgp/bench.hpp>
#include <hapticgp/core.hpp>
#include <hapticgp/divergence.hpp>
#include <hapticgp/gp.hpp>
#include <hapticgp/ingest.hpp>
#include <hapticgp/metrics.hpp>
#include <hapticgp/nn.hpp>
#include <hapticgp/pipeline.hpp>
#include <hapticgp/shapley.hpp>

#endif // HAPTICGP_HAPTICGP_HPP
