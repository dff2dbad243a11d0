#include "plf/case.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "plf/errors.hpp"
#include "plf/util.hpp"

namespace plf {

using json = nlohmann::ordered_json;

int PowerSystemCase::bus_index(int bus_id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == bus_id) return static_cast<int>(i);
    throw Error("ValidationFailed", "bus id " + std::to_string(bus_id) + " not found");
}

std::unordered_map<int, int> PowerSystemCase::bus_index_map() const {
    std::unordered_map<int, int> m;
    for (size_t i = 0; i < buses.size(); ++i) m.emplace(buses[i].id, static_cast<int>(i));
    return m;
}

void validate_case(const PowerSystemCase& sys) {
    if (!(sys.base_mva > 0)) throw Error("ValidationFailed", "base_mva must be positive");
    if (sys.buses.empty()) throw Error("ValidationFailed", "case has no buses");
    std::set<int> ids;
    int slack_count = 0;
    for (const Bus& b : sys.buses) {
        if (!ids.insert(b.id).second)
            throw Error("ValidationFailed", "duplicate bus id " + std::to_string(b.id));
        if (b.bus_type == BusType::slack) ++slack_count;
        if (!(b.v_mag_init > 0))
            throw Error("ValidationFailed", "bus " + std::to_string(b.id) + ": v_mag_init must be positive");
    }
    if (slack_count != 1)
        throw Error("ValidationFailed",
                    "expected exactly one slack bus, found " + std::to_string(slack_count));
    for (size_t k = 0; k < sys.branches.size(); ++k) {
        const Branch& br = sys.branches[k];
        if (!ids.count(br.from_bus) || !ids.count(br.to_bus))
            throw Error("ValidationFailed", "branch " + std::to_string(k) + ": endpoint bus not found");
        if (br.in_service && br.r * br.r + br.x * br.x <= 0)
            throw Error("ValidationFailed", "branch " + std::to_string(k) + ": zero impedance");
    }
    for (size_t k = 0; k < sys.generators.size(); ++k) {
        const Generator& g = sys.generators[k];
        if (!ids.count(g.bus))
            throw Error("ValidationFailed", "generator " + std::to_string(k) + ": bus not found");
        if (g.q_min > g.q_max)
            throw Error("ValidationFailed", "generator " + std::to_string(k) + ": q_min > q_max");
    }
}

namespace {

std::string strip_matlab_comments(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    for (char c : text) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        out.push_back(in_comment ? ' ' : c);
    }
    return out;
}

std::vector<std::vector<double>> parse_matrix(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    while (pos != std::string::npos) {
        size_t eq = text.find_first_not_of(" \t", pos + key.size());
        if (eq != std::string::npos && text[eq] == '=') break;
        pos = text.find(key, pos + 1);
    }
    if (pos == std::string::npos) throw Error("MissingSection", "mpc." + name + " not found");
    const size_t open = text.find('[', pos);
    const size_t close = text.find(']', open);
    if (open == std::string::npos || close == std::string::npos)
        throw Error("MissingSection", "mpc." + name + " matrix brackets not found");

    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    std::string tok;
    auto flush_tok = [&] {
        if (tok.empty()) return;
        try {
            size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            row.push_back(v);
        } catch (const std::exception&) {
            throw Error("MalformedRow", "mpc." + name + ": bad numeric token '" + tok + "'");
        }
        tok.clear();
    };
    auto flush_row = [&] {
        flush_tok();
        if (!row.empty()) {
            rows.push_back(row);
            row.clear();
        }
    };
    for (size_t i = open + 1; i < close; ++i) {
        const char c = text[i];
        if (c == ';' || c == '\n') {
            flush_row();
        } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
            flush_tok();
        } else {
            tok.push_back(c);
        }
    }
    flush_row();
    return rows;
}

double parse_base_mva(const std::string& text) {
    const std::string key = "mpc.baseMVA";
    const size_t pos = text.find(key);
    if (pos == std::string::npos) throw Error("MissingSection", "mpc.baseMVA not found");
    const size_t eq = text.find('=', pos);
    const size_t end = text.find(';', eq);
    if (eq == std::string::npos || end == std::string::npos)
        throw Error("MissingSection", "mpc.baseMVA assignment malformed");
    try {
        return std::stod(text.substr(eq + 1, end - eq - 1));
    } catch (const std::exception&) {
        throw Error("MalformedRow", "mpc.baseMVA: bad numeric value");
    }
}

}  // namespace

PowerSystemCase parse_matpower_case(const std::string& raw) {
    const std::string text = strip_matlab_comments(raw);
    PowerSystemCase sys;
    sys.base_mva = parse_base_mva(text);
    const double base = sys.base_mva;

    for (const auto& row : parse_matrix(text, "bus")) {
        if (row.size() < 9) throw Error("MalformedRow", "mpc.bus row has fewer than 9 columns");
        Bus b;
        b.id = static_cast<int>(row[0]);
        const int t = static_cast<int>(row[1]);
        if (t == 3) b.bus_type = BusType::slack;
        else if (t == 2) b.bus_type = BusType::pv;
        else if (t == 1) b.bus_type = BusType::pq;
        else throw Error("MalformedRow", "bus " + std::to_string(b.id) + ": bad bus type");
        b.p_demand = row[2] / base;
        b.q_demand = row[3] / base;
        b.g_shunt = row[4] / base;
        b.b_shunt = row[5] / base;
        b.v_mag_init = row[7];
        b.v_ang_init = deg_to_rad(row[8]);
        sys.buses.push_back(b);
    }
    for (const auto& row : parse_matrix(text, "gen")) {
        if (row.size() < 8) throw Error("MalformedRow", "mpc.gen row has fewer than 8 columns");
        Generator g;
        g.bus = static_cast<int>(row[0]);
        g.p_set = row[1] / base;
        g.q_set = row[2] / base;
        g.q_max = row[3] / base;
        g.q_min = row[4] / base;
        g.v_set = row[5];
        g.in_service = row[7] != 0;
        sys.generators.push_back(g);
    }
    for (const auto& row : parse_matrix(text, "branch")) {
        if (row.size() < 11) throw Error("MalformedRow", "mpc.branch row has fewer than 11 columns");
        Branch br;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        br.r = row[2];
        br.x = row[3];
        br.b_charging = row[4];
        br.tap_ratio = row[8];
        br.phase_shift = deg_to_rad(row[9]);
        br.in_service = row[10] != 0;
        sys.branches.push_back(br);
    }
    validate_case(sys);
    return sys;
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw Error("SchemaViolation", path + ": " + what);
}

double get_num(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) schema_error(path + "." + key, "missing");
    if (!j[key].is_number()) schema_error(path + "." + key, "not a number");
    return j[key].get<double>();
}

double get_num_or(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    return j[key].get<double>();
}

// angles: JSON number (plain degrees) or decimal string carrying extended
// precision as the writer emits
double get_angle_or(const json& j, const char* key, double dflt_rad) {
    if (!j.contains(key)) return dflt_rad;
    if (j[key].is_string()) return deg_text_to_rad(j[key].get<std::string>());
    return deg_to_rad(j[key].get<double>());
}

}  // namespace

PowerSystemCase parse_structured_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw Error("SchemaViolation", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error("SchemaViolation", "top level must be an object");
    for (auto& [key, _] : doc.items())
        if (key != "base_mva" && key != "buses" && key != "branches" && key != "generators")
            schema_error(key, "unknown key");

    PowerSystemCase sys;
    sys.base_mva = get_num(doc, "$", "base_mva");
    if (!doc.contains("buses") || !doc["buses"].is_array() || doc["buses"].empty())
        throw Error("SchemaViolation", "buses: missing or empty");

    int i = 0;
    for (const auto& jb : doc["buses"]) {
        const std::string path = "buses[" + std::to_string(i++) + "]";
        Bus b;
        b.id = static_cast<int>(get_num(jb, path, "id"));
        const std::string t = jb.value("type", "");
        if (t == "slack") b.bus_type = BusType::slack;
        else if (t == "pv") b.bus_type = BusType::pv;
        else if (t == "pq") b.bus_type = BusType::pq;
        else schema_error(path + ".type", "must be slack|pv|pq");
        b.p_demand = get_num_or(jb, "p_demand", 0);
        b.q_demand = get_num_or(jb, "q_demand", 0);
        b.g_shunt = get_num_or(jb, "g_shunt", 0);
        b.b_shunt = get_num_or(jb, "b_shunt", 0);
        b.v_mag_init = get_num_or(jb, "v_mag", 1.0);
        b.v_ang_init = get_angle_or(jb, "v_ang_deg", 0);
        sys.buses.push_back(b);
    }
    i = 0;
    for (const auto& jb : doc.value("branches", json::array())) {
        const std::string path = "branches[" + std::to_string(i++) + "]";
        Branch br;
        br.from_bus = static_cast<int>(get_num(jb, path, "from"));
        br.to_bus = static_cast<int>(get_num(jb, path, "to"));
        br.r = get_num_or(jb, "r", 0);
        br.x = get_num_or(jb, "x", 0);
        br.b_charging = get_num_or(jb, "b", 0);
        br.tap_ratio = get_num_or(jb, "tap", 0);
        br.phase_shift = get_angle_or(jb, "shift_deg", 0);
        br.in_service = jb.value("in_service", true);
        sys.branches.push_back(br);
    }
    i = 0;
    for (const auto& jg : doc.value("generators", json::array())) {
        const std::string path = "generators[" + std::to_string(i++) + "]";
        Generator g;
        g.bus = static_cast<int>(get_num(jg, path, "bus"));
        g.p_set = get_num_or(jg, "p_set", 0);
        g.q_set = get_num_or(jg, "q_set", 0);
        g.v_set = get_num_or(jg, "v_set", 1.0);
        g.q_min = get_num_or(jg, "q_min", 0);
        g.q_max = get_num_or(jg, "q_max", 0);
        g.in_service = jg.value("in_service", true);
        sys.generators.push_back(g);
    }
    try {
        validate_case(sys);
    } catch (const Error& e) {
        throw Error("SchemaViolation", e.what());
    }
    return sys;
}

std::string write_structured_case(const PowerSystemCase& sys) {
    json doc;
    doc["base_mva"] = sys.base_mva;
    doc["buses"] = json::array();
    for (const Bus& b : sys.buses) {
        json jb;
        jb["id"] = b.id;
        jb["type"] = b.bus_type == BusType::slack ? "slack" : b.bus_type == BusType::pv ? "pv" : "pq";
        jb["p_demand"] = b.p_demand;
        jb["q_demand"] = b.q_demand;
        jb["g_shunt"] = b.g_shunt;
        jb["b_shunt"] = b.b_shunt;
        jb["v_mag"] = b.v_mag_init;
        jb["v_ang_deg"] = rad_to_deg_text(b.v_ang_init);
        doc["buses"].push_back(jb);
    }
    doc["branches"] = json::array();
    for (const Branch& br : sys.branches) {
        json jb;
        jb["from"] = br.from_bus;
        jb["to"] = br.to_bus;
        jb["r"] = br.r;
        jb["x"] = br.x;
        jb["b"] = br.b_charging;
        jb["tap"] = br.tap_ratio;
        jb["shift_deg"] = rad_to_deg_text(br.phase_shift);
        jb["in_service"] = br.in_service;
        doc["branches"].push_back(jb);
    }
    doc["generators"] = json::array();
    for (const Generator& g : sys.generators) {
        json jg;
        jg["bus"] = g.bus;
        jg["p_set"] = g.p_set;
        jg["q_set"] = g.q_set;
        jg["v_set"] = g.v_set;
        jg["q_min"] = g.q_min;
        jg["q_max"] = g.q_max;
        jg["in_service"] = g.in_service;
        doc["generators"].push_back(jg);
    }
    return doc.dump(2) + "\n";
}

PowerSystemCase load_case(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    if (path.extension() == ".m") return parse_matpower_case(text);
    if (path.extension() == ".json") return parse_structured_case(text);
    throw Error("ValidationFailed", "unknown case file extension: " + path.string());
}

}  // namespace plf
