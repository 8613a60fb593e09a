#include "ntl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ntl/error.hpp"

namespace ntl::grid {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

using json = nlohmann::json;

// Check names double as the first words of ValidationError messages.
constexpr std::string_view kDuplicateBus = "duplicate bus id";
constexpr std::string_view kNominalVoltage = "nominal voltage positive";
constexpr std::string_view kDuplicateBranch = "duplicate branch id";
constexpr std::string_view kBranchEndpoints = "branch endpoints exist";
constexpr std::string_view kSelfLoop = "branch self-loop";
constexpr std::string_view kImpedance = "branch impedance non-negative";
constexpr std::string_view kSlackCount = "slack count";
constexpr std::string_view kSlackBus = "slack bus exists";
constexpr std::string_view kSlackVoltage = "slack voltage positive";
constexpr std::string_view kRadial = "not radial";
constexpr std::string_view kConnected = "disconnected bus";
constexpr std::string_view kDuplicateMeter = "duplicate meter id";
constexpr std::string_view kMeterDangling = "meter→bus dangling";
constexpr std::string_view kMeterPerBus = "one meter per bus";
constexpr std::string_view kMeterPhase = "meter phase compatibility";
constexpr std::string_view kPhaseContinuity = "phase continuity";
constexpr std::string_view kVoltageLevel = "nominal voltage consistent across branch";

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        parent[b] = a;
        return true;
    }
};

struct Topology {
    std::vector<std::size_t> order;
    std::vector<std::size_t> parent;
    std::vector<std::size_t> parent_branch;
};

// BFS from `root` over branches whose endpoints both resolve.
Topology traverse(const NetworkData& data, const std::unordered_map<std::string, std::size_t>& lookup,
                  std::size_t root) {
    const std::size_t n = data.buses.size();
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(n);
    for (std::size_t k = 0; k < data.branches.size(); ++k) {
        const auto& br = data.branches[k];
        auto f = lookup.find(br.from);
        auto t = lookup.find(br.to);
        if (f == lookup.end() || t == lookup.end() || f->second == t->second) {
            continue;
        }
        adjacency[f->second].emplace_back(t->second, k);
        adjacency[t->second].emplace_back(f->second, k);
    }
    Topology topo;
    topo.parent.assign(n, npos);
    topo.parent_branch.assign(n, npos);
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{root};
    seen[root] = true;
    while (!queue.empty()) {
        const auto bus = queue.front();
        queue.pop_front();
        topo.order.push_back(bus);
        for (auto [next, branch] : adjacency[bus]) {
            if (!seen[next]) {
                seen[next] = true;
                topo.parent[next] = bus;
                topo.parent_branch[next] = branch;
                queue.push_back(next);
            }
        }
    }
    return topo;
}

CheckResult& add_check(ValidationReport& report, std::string_view name) {
    report.checks.push_back(CheckResult{std::string{name}, true, {}});
    return report.checks.back();
}

void flag(CheckResult& check, std::string id) {
    check.passed = false;
    check.offending_ids.push_back(std::move(id));
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) {
        throw ParseError(std::string{where} + ": expected an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ParseError(std::string{where} + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
T required(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key)) {
        throw ParseError(std::string{where} + ": missing key '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string{where} + ": key '" + key + "' has the wrong type");
    }
}

template <class T>
std::optional<T> optional_field(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return std::nullopt;
    }
    return required<T>(obj, key, where);
}

const json& required_array(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_array()) {
        throw ParseError(std::string{"network: '"} + key + "' must be a list");
    }
    return doc.at(key);
}

}  // namespace

std::uint8_t phase_mask(PhaseConfig config) {
    switch (config) {
        case PhaseConfig::three_phase: return 0b111;
        case PhaseConfig::single_phase_a: return 0b001;
        case PhaseConfig::single_phase_b: return 0b010;
        case PhaseConfig::single_phase_c: return 0b100;
    }
    return 0;
}

std::optional<Phase> single_phase_of(PhaseConfig config) {
    switch (config) {
        case PhaseConfig::single_phase_a: return Phase::a;
        case PhaseConfig::single_phase_b: return Phase::b;
        case PhaseConfig::single_phase_c: return Phase::c;
        case PhaseConfig::three_phase: break;
    }
    return std::nullopt;
}

std::string_view to_string(PhaseConfig config) {
    switch (config) {
        case PhaseConfig::three_phase: return "ABC";
        case PhaseConfig::single_phase_a: return "A";
        case PhaseConfig::single_phase_b: return "B";
        case PhaseConfig::single_phase_c: return "C";
    }
    return "?";
}

std::optional<PhaseConfig> parse_phase_config(std::string_view text) {
    if (text == "ABC" || text == "abc") return PhaseConfig::three_phase;
    if (text == "A" || text == "a") return PhaseConfig::single_phase_a;
    if (text == "B" || text == "b") return PhaseConfig::single_phase_b;
    if (text == "C" || text == "c") return PhaseConfig::single_phase_c;
    return std::nullopt;
}

std::string_view to_string(Connection connection) {
    return connection == Connection::three_phase ? "three_phase" : "single_phase";
}

std::optional<Connection> parse_connection(std::string_view text) {
    if (text == "single_phase") return Connection::single_phase;
    if (text == "three_phase") return Connection::three_phase;
    return std::nullopt;
}

char to_char(Phase phase) {
    return static_cast<char>('A' + static_cast<int>(phase));
}

std::optional<Phase> parse_phase(std::string_view text) {
    if (text == "A" || text == "a") return Phase::a;
    if (text == "B" || text == "b") return Phase::b;
    if (text == "C" || text == "c") return Phase::c;
    return std::nullopt;
}

bool ValidationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* ValidationReport::first_failure() const {
    for (const auto& c : checks) {
        if (!c.passed) {
            return &c;
        }
    }
    return nullptr;
}

const CheckResult* ValidationReport::find(std::string_view name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

ValidationReport validate(const NetworkData& data) {
    ValidationReport report;
    // Checks are held by reference while later ones are appended.
    report.checks.reserve(32);

    std::unordered_map<std::string, std::size_t> bus_lookup;
    {
        auto& dup = add_check(report, kDuplicateBus);
        for (std::size_t i = 0; i < data.buses.size(); ++i) {
            if (!bus_lookup.emplace(data.buses[i].id, i).second) {
                flag(dup, data.buses[i].id);
            }
        }
        auto& nominal = add_check(report, kNominalVoltage);
        for (const auto& bus : data.buses) {
            if (!(bus.v_nominal > 0.0) || !std::isfinite(bus.v_nominal)) {
                flag(nominal, bus.id);
            }
        }
    }

    bool endpoints_ok = true;
    {
        std::unordered_set<std::string> seen;
        auto& dup = add_check(report, kDuplicateBranch);
        auto& ends = add_check(report, kBranchEndpoints);
        auto& loop = add_check(report, kSelfLoop);
        auto& imp = add_check(report, kImpedance);
        auto& level = add_check(report, kVoltageLevel);
        for (const auto& br : data.branches) {
            if (!seen.insert(br.id).second) {
                flag(dup, br.id);
            }
            auto f = bus_lookup.find(br.from);
            auto t = bus_lookup.find(br.to);
            if (f == bus_lookup.end() || t == bus_lookup.end()) {
                flag(ends, br.id);
                endpoints_ok = false;
            } else if (data.buses[f->second].v_nominal != data.buses[t->second].v_nominal) {
                flag(level, br.id);
            }
            if (br.from == br.to) {
                flag(loop, br.id);
                endpoints_ok = false;
            }
            if (!(br.r_ohm >= 0.0) || !(br.x_ohm >= 0.0) || !std::isfinite(br.r_ohm) ||
                !std::isfinite(br.x_ohm)) {
                flag(imp, br.id);
            }
        }
    }

    std::optional<std::size_t> slack;
    {
        auto& count = add_check(report, kSlackCount);
        if (data.slack.size() != 1) {
            count.passed = false;
            for (const auto& s : data.slack) {
                count.offending_ids.push_back(s.bus);
            }
            if (data.slack.empty()) {
                count.offending_ids.emplace_back("<missing>");
            }
        }
        auto& exists = add_check(report, kSlackBus);
        auto& volts = add_check(report, kSlackVoltage);
        for (const auto& s : data.slack) {
            auto it = bus_lookup.find(s.bus);
            if (it == bus_lookup.end()) {
                flag(exists, s.bus);
            } else if (data.slack.size() == 1) {
                slack = it->second;
            }
            if (!(s.v_pu > 0.0) || !std::isfinite(s.v_pu)) {
                flag(volts, s.bus);
            }
        }
    }

    bool tree_ok = false;
    Topology topo;
    {
        auto& radial = add_check(report, kRadial);
        if (!data.buses.empty() && data.branches.size() + 1 != data.buses.size()) {
            radial.passed = false;
            radial.offending_ids.push_back("branches=" + std::to_string(data.branches.size()) +
                                           " buses=" + std::to_string(data.buses.size()));
        }
        DisjointSet sets(data.buses.size());
        for (const auto& br : data.branches) {
            auto f = bus_lookup.find(br.from);
            auto t = bus_lookup.find(br.to);
            if (f == bus_lookup.end() || t == bus_lookup.end() || f->second == t->second) {
                continue;
            }
            if (!sets.unite(f->second, t->second)) {
                flag(radial, br.id);
            }
        }
        auto& connected = add_check(report, kConnected);
        if (slack) {
            topo = traverse(data, bus_lookup, *slack);
            std::vector<bool> reached(data.buses.size(), false);
            for (auto b : topo.order) {
                reached[b] = true;
            }
            for (std::size_t i = 0; i < data.buses.size(); ++i) {
                if (!reached[i]) {
                    flag(connected, data.buses[i].id);
                }
            }
            tree_ok = radial.passed && connected.passed && endpoints_ok;
        } else if (!data.buses.empty()) {
            connected.passed = false;
            connected.offending_ids.emplace_back("<no slack>");
        }
    }

    {
        std::unordered_set<std::string> seen;
        std::unordered_map<std::string, std::string> bus_meter;
        auto& dup = add_check(report, kDuplicateMeter);
        auto& dangling = add_check(report, kMeterDangling);
        auto& per_bus = add_check(report, kMeterPerBus);
        auto& phase = add_check(report, kMeterPhase);
        for (const auto& m : data.meters) {
            if (!seen.insert(m.id).second) {
                flag(dup, m.id);
            }
            auto it = bus_lookup.find(m.bus);
            if (it == bus_lookup.end()) {
                flag(dangling, m.id);
                continue;
            }
            if (!bus_meter.emplace(m.bus, m.id).second) {
                flag(per_bus, m.id);
            }
            const auto config = data.buses[it->second].phases;
            const bool single_bus = single_phase_of(config).has_value();
            if ((m.connection == Connection::single_phase) != single_bus) {
                flag(phase, m.id);
            }
        }
    }

    {
        auto& continuity = add_check(report, kPhaseContinuity);
        if (tree_ok) {
            for (auto bus : topo.order) {
                if (topo.parent[bus] == npos) {
                    continue;
                }
                const auto child = phase_mask(data.buses[bus].phases);
                const auto par = phase_mask(data.buses[topo.parent[bus]].phases);
                if ((child & ~par) != 0) {
                    flag(continuity, data.buses[bus].id);
                }
            }
        }
    }
    return report;
}

Network Network::build(NetworkData data) {
    auto report = validate(data);
    if (const auto* failure = report.first_failure()) {
        std::string msg = "validation failed: " + failure->name;
        for (std::size_t i = 0; i < failure->offending_ids.size() && i < 5; ++i) {
            msg += (i == 0 ? ": " : ", ") + failure->offending_ids[i];
        }
        throw ValidationError(msg);
    }

    Network net;
    net.data_ = std::move(data);
    const auto& d = net.data_;
    for (std::size_t i = 0; i < d.buses.size(); ++i) {
        net.bus_lookup_.emplace(d.buses[i].id, i);
    }
    for (std::size_t i = 0; i < d.meters.size(); ++i) {
        net.meter_lookup_.emplace(d.meters[i].id, i);
        net.meter_bus_.push_back(net.bus_lookup_.at(d.meters[i].bus));
    }
    net.slack_ = net.bus_lookup_.at(d.slack.front().bus);
    auto topo = traverse(d, net.bus_lookup_, net.slack_);
    net.order_ = std::move(topo.order);
    net.parent_ = std::move(topo.parent);
    net.parent_branch_ = std::move(topo.parent_branch);

    // Feeder labels follow branch order of the slack-adjacent branches.
    net.feeder_.assign(d.buses.size(), kRootFeeder);
    std::vector<std::pair<std::size_t, std::size_t>> heads;  // (branch index, bus)
    for (auto bus : net.order_) {
        if (net.parent_[bus] == net.slack_) {
            heads.emplace_back(net.parent_branch_[bus], bus);
        }
    }
    std::sort(heads.begin(), heads.end());
    for (std::size_t f = 0; f < heads.size(); ++f) {
        net.feeder_[heads[f].second] = static_cast<int>(f);
    }
    for (auto bus : net.order_) {
        const auto p = net.parent_[bus];
        if (p != npos && p != net.slack_) {
            net.feeder_[bus] = net.feeder_[p];
        }
    }
    net.feeder_count_ = static_cast<int>(heads.size());
    return net;
}

std::optional<std::size_t> Network::find_bus(std::string_view id) const {
    auto it = bus_lookup_.find(std::string{id});
    if (it == bus_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> Network::find_meter(std::string_view id) const {
    auto it = meter_lookup_.find(std::string{id});
    if (it == meter_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t Network::bus_index(std::string_view id) const {
    if (auto idx = find_bus(id)) {
        return *idx;
    }
    throw Error("unknown bus '" + std::string{id} + "'");
}

std::size_t Network::meter_index(std::string_view id) const {
    if (auto idx = find_meter(id)) {
        return *idx;
    }
    throw Error("unknown meter '" + std::string{id} + "'");
}

std::optional<std::size_t> Network::parent(std::size_t bus) const {
    if (parent_[bus] == npos) {
        return std::nullopt;
    }
    return parent_[bus];
}

std::optional<std::size_t> Network::parent_branch(std::size_t bus) const {
    if (parent_branch_[bus] == npos) {
        return std::nullopt;
    }
    return parent_branch_[bus];
}

int Network::feeder_of(std::string_view bus_id) const {
    return feeder_[bus_index(bus_id)];
}

std::complex<double> Network::branch_z_pu(std::size_t branch) const {
    if (!bases_) {
        throw Error("network is not per-unit annotated");
    }
    return z_pu_[branch];
}

double base_impedance(double v_base, const PerUnitBases& bases) {
    return v_base * v_base / bases.s_base_va;
}

Network to_per_unit(const Network& network, PerUnitBases bases) {
    if (!(bases.s_base_va > 0.0)) {
        throw Error("per-unit base power must be positive");
    }
    Network out = network;
    out.bases_ = bases;
    out.z_pu_.clear();
    for (const auto& br : network.branches()) {
        const double v_base = network.buses()[network.bus_index(br.from)].v_nominal;
        if (!(v_base > 0.0)) {
            throw Error("missing nominal voltage on bus '" + br.from + "'");
        }
        const double z_base = base_impedance(v_base, bases);
        out.z_pu_.emplace_back(br.r_ohm / z_base, br.x_ohm / z_base);
    }
    return out;
}

Network from_per_unit(const Network& network) {
    if (!network.bases_) {
        throw Error("network is not per-unit annotated");
    }
    Network out = network;
    for (std::size_t k = 0; k < out.data_.branches.size(); ++k) {
        auto& br = out.data_.branches[k];
        const double z_base = base_impedance(network.buses()[network.bus_index(br.from)].v_nominal,
                                             *network.bases_);
        br.r_ohm = network.z_pu_[k].real() * z_base;
        br.x_ohm = network.z_pu_[k].imag() * z_base;
    }
    out.bases_.reset();
    out.z_pu_.clear();
    return out;
}

NetworkData parse_network(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string{"network: "} + e.what());
    }
    check_keys(doc, {"buses", "branches", "meters", "slack"}, "network");

    NetworkData data;
    for (const auto& b : required_array(doc, "buses")) {
        check_keys(b, {"id", "phases", "v_nominal"}, "bus");
        Bus bus;
        bus.id = required<std::string>(b, "id", "bus");
        const auto phases = required<std::string>(b, "phases", "bus " + bus.id);
        auto config = parse_phase_config(phases);
        if (!config) {
            throw ParseError("bus " + bus.id + ": invalid phases '" + phases + "'");
        }
        bus.phases = *config;
        bus.v_nominal = optional_field<double>(b, "v_nominal", "bus " + bus.id).value_or(230.0);
        data.buses.push_back(std::move(bus));
    }
    for (const auto& b : required_array(doc, "branches")) {
        check_keys(b, {"id", "from", "to", "r_ohm", "x_ohm", "length_m"}, "branch");
        Branch br;
        br.id = required<std::string>(b, "id", "branch");
        const std::string where = "branch " + br.id;
        br.from = required<std::string>(b, "from", where);
        br.to = required<std::string>(b, "to", where);
        br.r_ohm = required<double>(b, "r_ohm", where);
        br.x_ohm = required<double>(b, "x_ohm", where);
        br.length_m = optional_field<double>(b, "length_m", where).value_or(0.0);
        data.branches.push_back(std::move(br));
    }
    for (const auto& m : required_array(doc, "meters")) {
        check_keys(m, {"id", "bus", "connection", "contracted_kw"}, "meter");
        Meter meter;
        meter.id = required<std::string>(m, "id", "meter");
        const std::string where = "meter " + meter.id;
        meter.bus = required<std::string>(m, "bus", where);
        const auto conn = required<std::string>(m, "connection", where);
        auto parsed = parse_connection(conn);
        if (!parsed) {
            throw ParseError(where + ": invalid connection '" + conn + "'");
        }
        meter.connection = *parsed;
        meter.contracted_kw = optional_field<double>(m, "contracted_kw", where);
        data.meters.push_back(std::move(meter));
    }
    if (!doc.contains("slack")) {
        throw ParseError("network: missing key 'slack'");
    }
    const auto& s = doc.at("slack");
    check_keys(s, {"bus", "v_pu"}, "slack");
    data.slack.push_back(SlackSource{required<std::string>(s, "bus", "slack"),
                                     optional_field<double>(s, "v_pu", "slack").value_or(1.0)});
    return data;
}

Network load_network(std::string_view document) {
    return Network::build(parse_network(document));
}

std::string dump_network(const NetworkData& data) {
    json doc;
    doc["buses"] = json::array();
    for (const auto& b : data.buses) {
        doc["buses"].push_back({{"id", b.id}, {"phases", to_string(b.phases)}, {"v_nominal", b.v_nominal}});
    }
    doc["branches"] = json::array();
    for (const auto& br : data.branches) {
        doc["branches"].push_back({{"id", br.id},
                                   {"from", br.from},
                                   {"to", br.to},
                                   {"r_ohm", br.r_ohm},
                                   {"x_ohm", br.x_ohm},
                                   {"length_m", br.length_m}});
    }
    doc["meters"] = json::array();
    for (const auto& m : data.meters) {
        json entry{{"id", m.id}, {"bus", m.bus}, {"connection", to_string(m.connection)}};
        if (m.contracted_kw) {
            entry["contracted_kw"] = *m.contracted_kw;
        }
        doc["meters"].push_back(std::move(entry));
    }
    if (!data.slack.empty()) {
        doc["slack"] = {{"bus", data.slack.front().bus}, {"v_pu", data.slack.front().v_pu}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace ntl::grid
