#pragma once

#include <array>
#include <complex>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntl/grid.hpp"
#include "ntl/time.hpp"

namespace ntl::powerflow {

/// Hourly mean demand of one meter.
struct PowerKw {
    double p_kw = 0.0;
    double q_kvar = 0.0;

    friend bool operator==(const PowerKw&, const PowerKw&) = default;
};

struct LoadSnapshot {
    Timestamp timestamp{};
    std::map<std::string, PowerKw> loads;
    std::set<std::string> missing;  // meters without a reading; solved as zero load
};

struct SolverConfig {
    double tolerance = 1e-8;  // p.u., max successive voltage change
    int max_iterations = 100;
    double flat_start_voltage = 1.0;  // initial magnitude relative to the slack
};

using PhaseVoltages = std::array<std::complex<double>, 3>;

struct VoltageSolution {
    Timestamp timestamp{};
    /// By bus index; absent phases are 0. Phases carry no mutual coupling,
    /// so each one is referenced to its own slack angle.
    std::vector<PhaseVoltages> phasors;
    int iterations = 0;
    bool converged = false;
    double max_mismatch = 0.0;

    double magnitude(std::size_t bus, grid::Phase phase) const {
        return std::abs(phasors[bus][static_cast<std::size_t>(phase)]);
    }
    /// Per-phase magnitudes by bus id; absent phases are reported as 0.
    std::map<std::string, std::array<double, 3>> voltages(const grid::Network& network) const;
};

/// Backward/forward sweep on a per-unit annotated radial network. Loads are
/// constant power; single-phase meters draw on their bus phase and
/// three-phase meters split P and Q equally across phases. Never throws on
/// divergence: the last iterate is returned with converged = false.
/// Throws ntl::Error if the network is not per-unit or a load names an
/// unknown meter.
VoltageSolution solve_snapshot(const grid::Network& network, const LoadSnapshot& snapshot,
                               const SolverConfig& config = {});

/// Same solver with loads indexed like network.meters().
VoltageSolution solve_loads(const grid::Network& network, std::span<const PowerKw> meter_loads,
                            const SolverConfig& config = {}, Timestamp timestamp = {});

/// Solves each snapshot independently, spread over `threads` workers
/// (0 = hardware concurrency). Output order matches input order.
std::vector<VoltageSolution> solve_series(const grid::Network& network,
                                          std::span<const LoadSnapshot> snapshots,
                                          const SolverConfig& config = {}, unsigned threads = 0);

/// Scalar voltage seen by a meter: its bus phase for single-phase meters,
/// the minimum phase magnitude for three-phase meters.
double meter_voltage(const VoltageSolution& solution, const grid::Network& network,
                     std::string_view meter_id);
double meter_voltage(const VoltageSolution& solution, const grid::Network& network,
                     std::size_t meter_index);

/// Largest |S_computed - S_specified| in p.u. over load buses, with the
/// injection recomputed from the solved voltages and the branch currents
/// implied by the voltage drops. Buses touching a zero-impedance branch are
/// skipped since their currents are not determined by voltages.
double power_balance_residual(const grid::Network& network, const LoadSnapshot& snapshot,
                              const VoltageSolution& solution);

/// Index helper shared by the series solver and the measurement generator.
std::vector<PowerKw> index_loads(const grid::Network& network, const LoadSnapshot& snapshot);

}  // namespace ntl::powerflow
