#include "ntl/powerflow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "ntl/error.hpp"

namespace ntl::powerflow {

namespace {

using cplx = std::complex<double>;

// Per-phase complex power demand at every bus, p.u.
std::vector<PhaseVoltages> bus_demand(const grid::Network& network, std::span<const PowerKw> meter_loads) {
    const double s_base_kva = network.bases()->s_base_va / 1000.0;
    std::vector<PhaseVoltages> demand(network.buses().size(), PhaseVoltages{});
    const auto meters = network.meters();
    for (std::size_t m = 0; m < meters.size(); ++m) {
        const auto& load = meter_loads[m];
        if (load.p_kw == 0.0 && load.q_kvar == 0.0) {
            continue;
        }
        const auto bus = network.meter_bus(m);
        const cplx s{load.p_kw / s_base_kva, load.q_kvar / s_base_kva};
        if (meters[m].connection == grid::Connection::three_phase) {
            for (auto& phase : demand[bus]) {
                phase += s / 3.0;
            }
        } else {
            const auto phase = grid::single_phase_of(network.buses()[bus].phases).value();
            demand[bus][static_cast<std::size_t>(phase)] += s;
        }
    }
    return demand;
}

}  // namespace

std::map<std::string, std::array<double, 3>> VoltageSolution::voltages(const grid::Network& network) const {
    std::map<std::string, std::array<double, 3>> out;
    for (std::size_t b = 0; b < phasors.size(); ++b) {
        std::array<double, 3> mags{};
        for (std::size_t p = 0; p < 3; ++p) {
            mags[p] = std::abs(phasors[b][p]);
        }
        out.emplace(network.buses()[b].id, mags);
    }
    return out;
}

std::vector<PowerKw> index_loads(const grid::Network& network, const LoadSnapshot& snapshot) {
    std::vector<PowerKw> loads(network.meters().size());
    for (const auto& [meter, power] : snapshot.loads) {
        auto idx = network.find_meter(meter);
        if (!idx) {
            throw Error("load references unknown meter '" + meter + "'");
        }
        if (!std::isfinite(power.p_kw) || !std::isfinite(power.q_kvar)) {
            throw Error("non-finite load for meter '" + meter + "'");
        }
        loads[*idx] = power;
    }
    for (const auto& meter : snapshot.missing) {
        if (!network.find_meter(meter)) {
            throw Error("missing-set references unknown meter '" + meter + "'");
        }
    }
    return loads;
}

VoltageSolution solve_loads(const grid::Network& network, std::span<const PowerKw> meter_loads,
                            const SolverConfig& config, Timestamp timestamp) {
    if (!network.is_per_unit()) {
        throw Error("power flow requires a per-unit annotated network");
    }
    if (meter_loads.size() != network.meters().size()) {
        throw Error("load vector size does not match meter count");
    }
    if (!(config.tolerance > 0.0) || config.max_iterations < 1) {
        throw Error("invalid solver configuration");
    }

    const auto buses = network.buses();
    const auto order = network.order();
    const std::size_t n = buses.size();
    const auto slack = network.slack_index();

    std::vector<std::uint8_t> mask(n);
    std::vector<cplx> z(n, cplx{});
    std::vector<std::size_t> parent(n, slack);
    for (std::size_t b = 0; b < n; ++b) {
        mask[b] = grid::phase_mask(buses[b].phases);
        if (auto br = network.parent_branch(b)) {
            z[b] = network.branch_z_pu(*br);
            parent[b] = *network.parent(b);
        }
    }
    const auto demand = bus_demand(network, meter_loads);

    VoltageSolution sol;
    sol.timestamp = timestamp;
    sol.phasors.assign(n, PhaseVoltages{});
    for (std::size_t b = 0; b < n; ++b) {
        const double start = network.slack_voltage() * (b == slack ? 1.0 : config.flat_start_voltage);
        for (std::size_t p = 0; p < 3; ++p) {
            if (mask[b] & (1u << p)) {
                sol.phasors[b][p] = cplx{start, 0.0};
            }
        }
    }

    std::vector<PhaseVoltages> current(n);
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        sol.iterations = iter;
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t p = 0; p < 3; ++p) {
                const cplx s = demand[b][p];
                current[b][p] = s == cplx{} ? cplx{} : std::conj(s / sol.phasors[b][p]);
            }
        }
        // Backward sweep: leaves to slack.
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto b = *it;
            if (b == slack) {
                continue;
            }
            for (std::size_t p = 0; p < 3; ++p) {
                current[parent[b]][p] += current[b][p];
            }
        }
        // Forward sweep: slack to leaves.
        double delta = 0.0;
        bool bounded = true;
        for (const auto b : order) {
            if (b == slack) {
                continue;
            }
            for (std::size_t p = 0; p < 3; ++p) {
                if (!(mask[b] & (1u << p))) {
                    continue;
                }
                const cplx v = sol.phasors[parent[b]][p] - z[b] * current[b][p];
                delta = std::max(delta, std::abs(v - sol.phasors[b][p]));
                sol.phasors[b][p] = v;
                const double mag = std::abs(v);
                if (!std::isfinite(mag) || mag <= 0.0 || mag >= 2.0) {
                    bounded = false;
                }
            }
        }
        sol.max_mismatch = delta;
        if (!bounded || !std::isfinite(delta)) {
            sol.converged = false;
            return sol;
        }
        if (delta < config.tolerance) {
            sol.converged = true;
            return sol;
        }
    }
    sol.converged = false;
    return sol;
}

VoltageSolution solve_snapshot(const grid::Network& network, const LoadSnapshot& snapshot,
                               const SolverConfig& config) {
    const auto loads = index_loads(network, snapshot);
    return solve_loads(network, loads, config, snapshot.timestamp);
}

std::vector<VoltageSolution> solve_series(const grid::Network& network,
                                          std::span<const LoadSnapshot> snapshots,
                                          const SolverConfig& config, unsigned threads) {
    for (std::size_t i = 1; i < snapshots.size(); ++i) {
        if (!(snapshots[i - 1].timestamp < snapshots[i].timestamp)) {
            throw Error("snapshots must be in strictly increasing time order");
        }
    }
    std::vector<VoltageSolution> out(snapshots.size());
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, snapshots.size()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < snapshots.size(); ++i) {
            out[i] = solve_snapshot(network, snapshots[i], config);
        }
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < snapshots.size(); i = next++) {
                    try {
                        out[i] = solve_snapshot(network, snapshots[i], config);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

double meter_voltage(const VoltageSolution& solution, const grid::Network& network, std::size_t meter_index) {
    const auto& meter = network.meters()[meter_index];
    const auto bus = network.meter_bus(meter_index);
    if (meter.connection == grid::Connection::single_phase) {
        const auto phase = grid::single_phase_of(network.buses()[bus].phases).value();
        return solution.magnitude(bus, phase);
    }
    return std::min({solution.magnitude(bus, grid::Phase::a), solution.magnitude(bus, grid::Phase::b),
                     solution.magnitude(bus, grid::Phase::c)});
}

double meter_voltage(const VoltageSolution& solution, const grid::Network& network, std::string_view meter_id) {
    return meter_voltage(solution, network, network.meter_index(meter_id));
}

double power_balance_residual(const grid::Network& network, const LoadSnapshot& snapshot,
                              const VoltageSolution& solution) {
    const auto loads = index_loads(network, snapshot);
    const auto demand = bus_demand(network, loads);
    const std::size_t n = network.buses().size();

    std::vector<PhaseVoltages> net_current(n, PhaseVoltages{});
    std::vector<bool> determined(n, true);
    for (std::size_t b = 0; b < n; ++b) {
        auto br = network.parent_branch(b);
        if (!br) {
            continue;
        }
        const auto p = *network.parent(b);
        const cplx z = network.branch_z_pu(*br);
        if (z == cplx{}) {
            determined[b] = false;
            determined[p] = false;
            continue;
        }
        const auto mask = grid::phase_mask(network.buses()[b].phases);
        for (std::size_t ph = 0; ph < 3; ++ph) {
            if (!(mask & (1u << ph))) {
                continue;
            }
            const cplx i = (solution.phasors[p][ph] - solution.phasors[b][ph]) / z;
            net_current[b][ph] += i;
            net_current[p][ph] -= i;
        }
    }
    double worst = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        if (b == network.slack_index() || !determined[b]) {
            continue;
        }
        for (std::size_t ph = 0; ph < 3; ++ph) {
            const cplx s = solution.phasors[b][ph] * std::conj(net_current[b][ph]);
            worst = std::max(worst, std::abs(s - demand[b][ph]));
        }
    }
    return worst;
}

}  // namespace ntl::powerflow
