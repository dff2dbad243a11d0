#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace plf {

enum class BusType { slack, pv, pq };

struct Bus {
    int id = 0;
    BusType bus_type = BusType::pq;
    double p_demand = 0;    // p.u.
    double q_demand = 0;    // p.u.
    double g_shunt = 0;     // p.u.
    double b_shunt = 0;     // p.u.
    double v_mag_init = 1;  // p.u.
    double v_ang_init = 0;  // radians

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0;
    double x = 0;
    double b_charging = 0;
    double tap_ratio = 0;    // 0 means 1.0 at solve time (MATPOWER convention)
    double phase_shift = 0;  // radians
    bool in_service = true;

    bool operator==(const Branch&) const = default;
};

struct Generator {
    int bus = 0;
    double p_set = 0;  // p.u.
    double q_set = 0;  // p.u.
    double v_set = 1;  // p.u.
    double q_min = 0;  // p.u.
    double q_max = 0;  // p.u.
    bool in_service = true;

    bool operator==(const Generator&) const = default;
};

struct PowerSystemCase {
    double base_mva = 100;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;

    bool operator==(const PowerSystemCase&) const = default;

    /// Position of a bus id in `buses`; throws ValidationFailed if absent.
    int bus_index(int bus_id) const;
    std::unordered_map<int, int> bus_index_map() const;
};

/// Throws ValidationFailed on any violated case invariant.
void validate_case(const PowerSystemCase& sys);

/// Parse the mpc.baseMVA / mpc.bus / mpc.gen / mpc.branch blocks of a
/// MATPOWER case file. MW/MVAr are converted to per-unit, degrees to radians.
/// Errors: MissingSection, MalformedRow, ValidationFailed.
PowerSystemCase parse_matpower_case(const std::string& text);

/// Structured JSON case document; angles are stored in degrees in the file.
/// Errors: SchemaViolation.
PowerSystemCase parse_structured_case(const std::string& text);

/// Writes the structured document. parse_structured_case(write_structured_case(c))
/// reproduces c field-exactly.
std::string write_structured_case(const PowerSystemCase& sys);

/// Dispatch on extension: ".m" MATPOWER, ".json" structured.
PowerSystemCase load_case(const std::filesystem::path& path);

}  // namespace plf
