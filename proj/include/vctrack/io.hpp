// SPDX-License-Identifier: Apache-2.0
//
// vctrack - virtual-channel tracking for time-varying massive MIMO links
// Copyright (C) 2026 the vctrack authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef VCTRACK_IO_HPP
#define VCTRACK_IO_HPP

#include "vctrack/dl_reconstruction.hpp"
#include "vctrack/harness.hpp"

#include <string>
#include <vector>

namespace vct
{

// Scenario file: JSON with the SystemConfig fields plus a "users" array of
// geometries (angles in degrees). See README for the schema.
Scenario load_scenario(const std::string &path);
void save_scenario(const Scenario &scenario, const std::string &path);

// Experiment file: scenario plus sweep axes.
ExperimentSpec load_experiment(const std::string &path);

// Learned-parameter file: per-user ModelParams, JSON.
void save_params(const std::vector<ModelParams> &params, const std::string &path);
std::vector<ModelParams> load_params(const std::string &path);

// Downlink partial-parameter file.
void save_dl_partials(const std::vector<DlModelPartial> &partials, double sigma_anchor,
                      const std::string &path);
std::vector<DlModelPartial> load_dl_partials(const std::string &path, double *sigma_anchor);

// Trajectory dump: one file per user, columns (block, antenna_index, re, im).
void dump_trajectory(const VirtualChannelTrajectory &traj, const std::string &path);

} // namespace vct

#endif
