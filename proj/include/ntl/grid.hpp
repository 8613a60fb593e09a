#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ntl::grid {

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

enum class PhaseConfig : std::uint8_t { three_phase, single_phase_a, single_phase_b, single_phase_c };

enum class Connection : std::uint8_t { single_phase, three_phase };

/// Bit mask of phases present at a bus (bit i = phase i).
std::uint8_t phase_mask(PhaseConfig config);
/// The declared phase of a single-phase bus; nullopt for three-phase.
std::optional<Phase> single_phase_of(PhaseConfig config);

std::string_view to_string(PhaseConfig config);
std::optional<PhaseConfig> parse_phase_config(std::string_view text);
std::string_view to_string(Connection connection);
std::optional<Connection> parse_connection(std::string_view text);
char to_char(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);

struct Bus {
    std::string id;
    PhaseConfig phases = PhaseConfig::three_phase;
    double v_nominal = 230.0;  // phase-to-neutral volts
};

struct Branch {
    std::string id;
    std::string from;
    std::string to;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    double length_m = 0.0;
};

struct Meter {
    std::string id;
    std::string bus;
    Connection connection = Connection::single_phase;
    std::optional<double> contracted_kw;
};

struct SlackSource {
    std::string bus;
    double v_pu = 1.0;
};

/// Raw network description as read from a file; may violate invariants.
/// More than one slack entry is representable so that validation can report it.
struct NetworkData {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Meter> meters;
    std::vector<SlackSource> slack;
};

struct CheckResult {
    std::string name;
    bool passed = true;
    std::vector<std::string> offending_ids;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool ok() const;
    const CheckResult* first_failure() const;
    const CheckResult* find(std::string_view name) const;
};

/// Runs every structural check. Never throws.
ValidationReport validate(const NetworkData& data);

struct PerUnitBases {
    double s_base_va = 10'000.0;  // per phase
};

/// Label reserved for the slack bus in feeder queries.
inline constexpr int kRootFeeder = -1;

/// Immutable, validated radial network with precomputed topology.
class Network {
  public:
    /// Validates `data` and builds the topology; throws ValidationError.
    static Network build(NetworkData data);

    const NetworkData& data() const { return data_; }
    std::span<const Bus> buses() const { return data_.buses; }
    std::span<const Branch> branches() const { return data_.branches; }
    std::span<const Meter> meters() const { return data_.meters; }

    std::optional<std::size_t> find_bus(std::string_view id) const;
    std::optional<std::size_t> find_meter(std::string_view id) const;
    /// Throws ntl::Error for unknown ids.
    std::size_t bus_index(std::string_view id) const;
    std::size_t meter_index(std::string_view id) const;

    std::size_t slack_index() const { return slack_; }
    double slack_voltage() const { return data_.slack.front().v_pu; }

    /// Buses in breadth-first order from the slack (slack first).
    std::span<const std::size_t> order() const { return order_; }
    /// Parent bus index; the slack has none.
    std::optional<std::size_t> parent(std::size_t bus) const;
    /// Branch connecting `bus` to its parent.
    std::optional<std::size_t> parent_branch(std::size_t bus) const;
    std::size_t meter_bus(std::size_t meter) const { return meter_bus_[meter]; }

    /// Feeder label of a bus: index of the slack-adjacent subtree holding it,
    /// numbered in branch order. The slack maps to kRootFeeder.
    int feeder_of(std::string_view bus_id) const;
    int feeder_of(std::size_t bus) const { return feeder_[bus]; }
    int feeder_count() const { return feeder_count_; }

    bool is_per_unit() const { return bases_.has_value(); }
    const std::optional<PerUnitBases>& bases() const { return bases_; }
    /// Per-unit series impedance of a branch; requires is_per_unit().
    std::complex<double> branch_z_pu(std::size_t branch) const;

  private:
    friend Network to_per_unit(const Network& network, PerUnitBases bases);
    friend Network from_per_unit(const Network& network);

    Network() = default;

    NetworkData data_;
    std::unordered_map<std::string, std::size_t> bus_lookup_;
    std::unordered_map<std::string, std::size_t> meter_lookup_;
    std::size_t slack_ = 0;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> parent_;         // npos for slack
    std::vector<std::size_t> parent_branch_;  // npos for slack
    std::vector<std::size_t> meter_bus_;
    std::vector<int> feeder_;
    int feeder_count_ = 0;
    std::optional<PerUnitBases> bases_;
    std::vector<std::complex<double>> z_pu_;
};

/// Base impedance V_base^2 / S_base in ohms.
double base_impedance(double v_base, const PerUnitBases& bases);

/// Annotates every branch with its per-unit impedance, voltage base = the
/// nominal phase voltage of the branch's buses.
Network to_per_unit(const Network& network, PerUnitBases bases = {});
/// Rebuilds ohmic impedances from the per-unit annotation.
Network from_per_unit(const Network& network);

/// Parses the network document; throws ParseError.
NetworkData parse_network(std::string_view document);
/// parse_network followed by Network::build.
Network load_network(std::string_view document);
std::string dump_network(const NetworkData& data);

}  // namespace ntl::grid
