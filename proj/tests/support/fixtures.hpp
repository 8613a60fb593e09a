#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ntl/grid.hpp"
#include "ntl/powerflow.hpp"

namespace ntl::test {

using cd = std::complex<double>;

inline grid::Bus bus(std::string id, grid::PhaseConfig phases = grid::PhaseConfig::three_phase, double v = 230.0) {
    return grid::Bus{std::move(id), phases, v};
}

inline grid::Branch branch(std::string id, std::string from, std::string to, double r, double x = 0.0) {
    return grid::Branch{std::move(id), std::move(from), std::move(to), r, x, 10.0};
}

inline grid::Meter meter(std::string id, std::string at, grid::Connection c = grid::Connection::three_phase) {
    return grid::Meter{std::move(id), std::move(at), c, std::nullopt};
}

/// Slack S feeding load bus B through one branch; meter m1 at B.
inline grid::NetworkData two_bus(double r_ohm = 0.0529, double x_ohm = 0.0529,
                                 grid::PhaseConfig phases = grid::PhaseConfig::single_phase_a) {
    grid::NetworkData d;
    d.buses = {bus("S"), bus("B", phases)};
    d.branches = {branch("L1", "S", "B", r_ohm, x_ohm)};
    d.meters = {meter("m1", "B",
                      phases == grid::PhaseConfig::three_phase ? grid::Connection::three_phase
                                                               : grid::Connection::single_phase)};
    d.slack = {{"S", 1.0}};
    return d;
}

/// Slack S, chain S - A - B with a meter on each load bus.
inline grid::NetworkData chain3(double r_ohm = 0.05, double x_ohm = 0.02) {
    grid::NetworkData d;
    d.buses = {bus("S"), bus("A"), bus("B")};
    d.branches = {branch("L1", "S", "A", r_ohm, x_ohm), branch("L2", "A", "B", r_ohm, x_ohm)};
    d.meters = {meter("mA", "A"), meter("mB", "B")};
    d.slack = {{"S", 1.0}};
    return d;
}

struct OracleCase {
    grid::NetworkData data;
    std::map<std::string, powerflow::PowerKw> loads;
};

/// Random radial network of 2..max_buses buses with mixed phasing and
/// random loads on most buses.
inline OracleCase random_small_case(std::mt19937_64& rng, int max_buses = 4) {
    std::uniform_int_distribution<int> n_dist(2, max_buses);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = n_dist(rng);
    OracleCase c;
    auto& d = c.data;
    d.buses.push_back(bus("S"));
    d.slack = {{"S", 0.95 + 0.1 * u(rng)}};
    const std::array<grid::PhaseConfig, 4> configs = {grid::PhaseConfig::three_phase, grid::PhaseConfig::single_phase_a,
                                                      grid::PhaseConfig::single_phase_b,
                                                      grid::PhaseConfig::single_phase_c};
    for (int i = 1; i < n; ++i) {
        const auto parent = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, i - 1)(rng));
        const auto parent_phases = d.buses[parent].phases;
        auto phases = parent_phases;
        if (parent_phases == grid::PhaseConfig::three_phase && u(rng) < 0.5) {
            phases = configs[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 3)(rng))];
        }
        const std::string id = "N" + std::to_string(i);
        d.buses.push_back(bus(id, phases));
        d.branches.push_back(branch("L" + std::to_string(i), d.buses[parent].id, id, 0.1 * u(rng), 0.1 * u(rng)));
        if (u(rng) < 0.8) {
            const auto conn = phases == grid::PhaseConfig::three_phase ? grid::Connection::three_phase
                                                                       : grid::Connection::single_phase;
            const std::string mid = "m" + std::to_string(i);
            d.meters.push_back(meter(mid, id, conn));
            c.loads[mid] = {3.0 * u(rng), -0.5 + 1.5 * u(rng)};
        }
    }
    return c;
}

/// Independent per-phase fixed point on path impedances:
/// V_i <- V_s - sum_j Z_common(i, j) * conj(S_j / V_j), where Z_common is the
/// impedance shared by the slack paths of buses i and j. Returns per-bus
/// per-phase magnitudes in p.u. on a 230 V / s_base_va basis, 0 for absent
/// phases.
inline std::map<std::string, std::array<double, 3>> oracle_voltages(const OracleCase& c,
                                                                     double s_base_va = 10'000.0) {
    const auto& d = c.data;
    const std::size_t n = d.buses.size();
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
        idx[d.buses[i].id] = i;
    }
    const std::size_t slack = idx.at(d.slack.front().bus);

    // Parent links by repeated relaxation; tiny networks only.
    std::vector<long> parent(n, -2);
    std::vector<cd> z_up(n, 0.0);
    parent[slack] = -1;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& br : d.branches) {
            const auto a = idx.at(br.from);
            const auto b = idx.at(br.to);
            const double z_base = d.buses[a].v_nominal * d.buses[a].v_nominal / s_base_va;
            const cd z{br.r_ohm / z_base, br.x_ohm / z_base};
            if (parent[a] != -2 && parent[b] == -2) {
                parent[b] = static_cast<long>(a);
                z_up[b] = z;
                changed = true;
            } else if (parent[b] != -2 && parent[a] == -2) {
                parent[a] = static_cast<long>(b);
                z_up[a] = z;
                changed = true;
            }
        }
    }
    auto path = [&](std::size_t i) {
        std::vector<std::size_t> p;
        for (long k = static_cast<long>(i); parent[static_cast<std::size_t>(k)] >= 0;
             k = parent[static_cast<std::size_t>(k)]) {
            p.push_back(static_cast<std::size_t>(k));
        }
        return p;
    };
    std::vector<std::vector<cd>> zc(n, std::vector<cd>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto pi = path(i);
        for (std::size_t j = 0; j < n; ++j) {
            for (auto k : path(j)) {
                for (auto q : pi) {
                    if (q == k) {
                        zc[i][j] += z_up[k];
                    }
                }
            }
        }
    }

    auto has_phase = [&](std::size_t b, int ph) {
        switch (d.buses[b].phases) {
            case grid::PhaseConfig::three_phase: return true;
            case grid::PhaseConfig::single_phase_a: return ph == 0;
            case grid::PhaseConfig::single_phase_b: return ph == 1;
            case grid::PhaseConfig::single_phase_c: return ph == 2;
        }
        return false;
    };

    std::map<std::string, std::array<double, 3>> out;
    for (const auto& b : d.buses) {
        out[b.id] = {0.0, 0.0, 0.0};
    }
    const double vs = d.slack.front().v_pu;
    for (int ph = 0; ph < 3; ++ph) {
        std::vector<cd> s(n, 0.0);
        for (const auto& m : d.meters) {
            auto it = c.loads.find(m.id);
            if (it == c.loads.end()) {
                continue;
            }
            const auto b = idx.at(m.bus);
            const cd s_pu = cd{it->second.p_kw, it->second.q_kvar} * 1000.0 / s_base_va;
            if (m.connection == grid::Connection::three_phase) {
                s[b] += s_pu / 3.0;
            } else if (has_phase(b, ph)) {
                s[b] += s_pu;
            }
        }
        const cd v0 = std::polar(vs, -2.0 * 3.14159265358979323846 / 3.0 * ph);
        std::vector<cd> v(n, v0);
        for (int it = 0; it < 10'000; ++it) {
            std::vector<cd> next(n, v0);
            double change = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (s[j] != 0.0) {
                        next[i] -= zc[i][j] * std::conj(s[j] / v[j]);
                    }
                }
                change = std::max(change, std::abs(next[i] - v[i]));
            }
            v = next;
            if (change < 1e-15) {
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (has_phase(i, ph)) {
                out[d.buses[i].id][static_cast<std::size_t>(ph)] = std::abs(v[i]);
            }
        }
    }
    return out;
}

inline powerflow::LoadSnapshot snapshot_of(const std::map<std::string, powerflow::PowerKw>& loads,
                                           Timestamp t = {}) {
    powerflow::LoadSnapshot s;
    s.timestamp = t;
    s.loads = loads;
    return s;
}

/// Fresh directory below the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag = "ntl") {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(std::uniform_int_distribution<std::uint64_t>()(rd)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline Timestamp at(const char* rfc3339) {
    return *parse_rfc3339(rfc3339);
}

inline Date ymd(const char* iso) {
    return *parse_date(iso);
}

}  // namespace ntl::test
