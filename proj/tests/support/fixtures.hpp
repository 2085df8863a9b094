#pragma once

#include "pdsim/pd_model.hpp"
#include "pdsim/simulator.hpp"
#include "pdsim/ss_model.hpp"

#include <filesystem>
#include <string>

namespace fixtures {

inline pdsim::ss::SSParams ss_set()
{
    return {0.5, 0.3, 1.0, 0.4, 0.2, 0.3, 0.05, 0.02};
}

/// Parameters used for the A(tau) Monte-Carlo check.
inline pdsim::ss::SSParams a_oracle_set()
{
    return {1.5, 0.8, 0.5, 0.6, 0.3, -0.2, 0.1, 0.05};
}

inline pdsim::pd::PDParams pd_set()
{
    pdsim::pd::PDParams p;
    p.base = {0.5, 0.3, 0.2, 0.4, 0.2, 0.0, 0.05, 0.02};
    p.coeffs.alpha << 1.0, 1.0, 1.0, 0.5, 0.3, 0.2;
    return p;
}

inline pdsim::pd::PDParams pd_linear_set()
{
    pdsim::pd::PDParams p = pd_set();
    p.coeffs.alpha << 1.0, 1.0, 1.0, 0.0, 0.0, 0.0;
    return p;
}

inline pdsim::ss::MeasurementErrorSpec errors(int m, double first = 0.03, double last = 0.01)
{
    return {m, first, last};
}

inline pdsim::sim::SimConfig config(pdsim::ModelKind model, pdsim::FilterKind filter, int n_obs,
                                    int m, std::uint64_t seed)
{
    pdsim::sim::SimConfig c;
    c.model_kind = model;
    c.filter_kind = filter;
    c.n_obs = n_obs;
    c.m = m;
    c.seed = seed;
    return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("pdsim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace fixtures
