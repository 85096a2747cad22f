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

#include "vctrack/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace vct
{

using nlohmann::json;

namespace
{

json read_json(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open file: " + path);
    json j;
    try
    {
        in >> j;
    }
    catch (const json::parse_error &e)
    {
        throw ValidationError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json(const json &j, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot open file for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out)
        throw NumericalError("write failure on " + path);
}

VecD to_vecd(const json &j)
{
    VecD v(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

VecI to_veci(const json &j)
{
    VecI v(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = j[i].get<int>();
    return v;
}

json from_vecd(const VecD &v)
{
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        j.push_back(v(i));
    return j;
}

json from_veci(const VecI &v)
{
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        j.push_back(v(i));
    return j;
}

SystemConfig config_from_json(const json &j)
{
    SystemConfig c;
    c.n_antennas = j.value("n_antennas", c.n_antennas);
    c.n_users = j.value("n_users", c.n_users);
    c.group_size = j.value("group_size", c.group_size);
    c.train_len = j.value("train_len", c.train_len);
    c.block_len = j.value("block_len", c.block_len);
    c.symbol_period = j.value("symbol_period", c.symbol_period);
    c.carrier_ul = j.value("carrier_ul", c.carrier_ul);
    c.carrier_dl = j.value("carrier_dl", c.carrier_dl);
    c.antenna_spacing_over_lambda =
        j.value("antenna_spacing_over_lambda", c.antenna_spacing_over_lambda);
    c.pilot_power = j.value("pilot_power", c.pilot_power);
    c.snr_db = j.value("snr_db", c.snr_db);
    return c;
}

json config_to_json(const SystemConfig &c)
{
    return json{{"n_antennas", c.n_antennas},
                {"n_users", c.n_users},
                {"group_size", c.group_size},
                {"train_len", c.train_len},
                {"block_len", c.block_len},
                {"symbol_period", c.symbol_period},
                {"carrier_ul", c.carrier_ul},
                {"carrier_dl", c.carrier_dl},
                {"antenna_spacing_over_lambda", c.antenna_spacing_over_lambda},
                {"pilot_power", c.pilot_power},
                {"snr_db", c.snr_db}};
}

} // namespace

Scenario load_scenario(const std::string &path)
{
    const json j = read_json(path);
    Scenario s;
    s.config = config_from_json(j);
    if (!j.contains("users"))
        throw ValidationError("scenario file needs a users array: " + path);
    for (const auto &ju : j.at("users"))
    {
        UserGeometry u;
        u.angle_min = ju.at("angle_min_deg").get<double>() * M_PI / 180.0;
        u.angle_max = ju.at("angle_max_deg").get<double>() * M_PI / 180.0;
        u.n_paths = ju.value("n_paths", u.n_paths);
        u.velocity = ju.value("velocity", u.velocity);
        u.path_gain_scale = ju.value("path_gain_scale", u.path_gain_scale);
        s.users.push_back(u);
    }
    s.validate();
    return s;
}

void save_scenario(const Scenario &scenario, const std::string &path)
{
    json j = config_to_json(scenario.config);
    json users = json::array();
    for (const auto &u : scenario.users)
        users.push_back(json{{"angle_min_deg", u.angle_min * 180.0 / M_PI},
                             {"angle_max_deg", u.angle_max * 180.0 / M_PI},
                             {"n_paths", u.n_paths},
                             {"velocity", u.velocity},
                             {"path_gain_scale", u.path_gain_scale}});
    j["users"] = users;
    write_json(j, path);
}

ExperimentSpec load_experiment(const std::string &path)
{
    const json j = read_json(path);
    ExperimentSpec spec;
    if (j.contains("scenario"))
    {
        const json &js = j.at("scenario");
        spec.scenario.config = config_from_json(js);
        for (const auto &ju : js.at("users"))
        {
            UserGeometry u;
            u.angle_min = ju.at("angle_min_deg").get<double>() * M_PI / 180.0;
            u.angle_max = ju.at("angle_max_deg").get<double>() * M_PI / 180.0;
            u.n_paths = ju.value("n_paths", u.n_paths);
            u.velocity = ju.value("velocity", u.velocity);
            spec.scenario.users.push_back(u);
        }
    }
    else
    {
        spec.scenario = j.value("profile", std::string("desk")) == "full" ? table1_profile()
                                                                          : desk_profile();
    }
    if (j.contains("snr_db_list"))
        spec.snr_db_list = j.at("snr_db_list").get<std::vector<double>>();
    if (j.contains("velocity_list"))
        spec.velocity_list = j.at("velocity_list").get<std::vector<double>>();
    spec.m_u = j.value("m_u", spec.m_u);
    spec.m_d = j.value("m_d", spec.m_d);
    spec.restore_blocks = j.value("restore_blocks", std::max(spec.restore_blocks, spec.m_d));
    spec.track_blocks = j.value("track_blocks", spec.track_blocks);
    spec.ul_track_blocks = j.value("ul_track_blocks", spec.ul_track_blocks);
    spec.trials = j.value("trials", spec.trials);
    spec.em_iters = j.value("em_iters", spec.em_iters);
    spec.mcmc.n_iters = j.value("mcmc_iters", spec.mcmc.n_iters);
    spec.mcmc.burn_in = j.value("burn_in", spec.mcmc.burn_in);
    spec.baseline_perfect = j.value("baseline_perfect", spec.baseline_perfect);
    spec.baseline_weak = j.value("baseline_weak", spec.baseline_weak);
    spec.master_seed = j.value("master_seed", spec.master_seed);
    spec.workers = j.value("workers", spec.workers);
    spec.validate();
    return spec;
}

void save_params(const std::vector<ModelParams> &params, const std::string &path)
{
    json users = json::array();
    for (const auto &p : params)
        users.push_back(json{{"alpha", p.alpha},
                             {"lambda_diag", from_vecd(p.lambda_diag)},
                             {"support", from_veci(p.support)},
                             {"bias", from_vecd(p.bias)},
                             {"noise_var", p.noise_var}});
    write_json(json{{"schema_version", 1}, {"users", users}}, path);
}

std::vector<ModelParams> load_params(const std::string &path)
{
    const json j = read_json(path);
    std::vector<ModelParams> out;
    for (const auto &ju : j.at("users"))
    {
        ModelParams p;
        p.alpha = ju.at("alpha").get<double>();
        p.lambda_diag = to_vecd(ju.at("lambda_diag"));
        p.support = to_veci(ju.at("support"));
        p.bias = to_vecd(ju.at("bias"));
        p.noise_var = ju.at("noise_var").get<double>();
        out.push_back(std::move(p));
    }
    return out;
}

void save_dl_partials(const std::vector<DlModelPartial> &partials, double sigma_anchor,
                      const std::string &path)
{
    json users = json::array();
    for (const auto &p : partials)
        users.push_back(json{{"alpha_dl", p.alpha_dl},
                             {"support_dl", from_veci(p.support_dl)},
                             {"bias_dl", from_vecd(p.bias_dl)},
                             {"bins", p.bins},
                             {"lambda_anchor", from_vecd(p.lambda_anchor)}});
    write_json(json{{"schema_version", 1}, {"sigma_anchor", sigma_anchor}, {"users", users}},
               path);
}

std::vector<DlModelPartial> load_dl_partials(const std::string &path, double *sigma_anchor)
{
    const json j = read_json(path);
    if (sigma_anchor != nullptr)
        *sigma_anchor = j.value("sigma_anchor", 0.0);
    std::vector<DlModelPartial> out;
    for (const auto &ju : j.at("users"))
    {
        DlModelPartial p;
        p.alpha_dl = ju.at("alpha_dl").get<double>();
        p.support_dl = to_veci(ju.at("support_dl"));
        p.bias_dl = to_vecd(ju.at("bias_dl"));
        p.bins = ju.at("bins").get<std::vector<int>>();
        p.lambda_anchor = to_vecd(ju.at("lambda_anchor"));
        out.push_back(std::move(p));
    }
    return out;
}

void dump_trajectory(const VirtualChannelTrajectory &traj, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot open file for writing: " + path);
    out.precision(17);
    out << "schema_version,1\n";
    out << "block,antenna_index,re,im\n";
    for (size_t m = 0; m < traj.physical.size(); ++m)
        for (Eigen::Index i = 0; i < traj.physical[m].size(); ++i)
            out << m << ',' << i << ',' << traj.physical[m](i).real() << ','
                << traj.physical[m](i).imag() << '\n';
    if (!out)
        throw NumericalError("write failure on " + path);
}

} // namespace vct
