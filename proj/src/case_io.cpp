#include "maropf/case_io.hpp"

#include "maropf/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#ifndef MAROPF_DEFAULT_DATA_DIR
#define MAROPF_DEFAULT_DATA_DIR "data"
#endif

namespace maropf {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path data_dir() {
    if (const char* env = std::getenv("MAROPF_DATA_DIR"); env && *env) return fs::path(env);
    return fs::path(MAROPF_DEFAULT_DATA_DIR);
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

struct Field {
    const json& j;
    std::string path;

    Field at(const std::string& key) const { return {j.at(key), path.empty() ? key : path + "." + key}; }
    Field at(std::size_t i) const { return {j.at(i), path + "[" + std::to_string(i) + "]"}; }
    bool has(const std::string& key) const { return j.is_object() && j.contains(key); }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::ParseError, "field '" + path + "': " + what);
    }
    double number() const {
        if (!j.is_number()) fail("expected a number");
        return j.get<double>();
    }
    int integer() const {
        if (!j.is_number_integer()) fail("expected an integer");
        return j.get<int>();
    }
    bool boolean() const {
        if (!j.is_boolean()) fail("expected true or false");
        return j.get<bool>();
    }
    std::string string() const {
        if (!j.is_string()) fail("expected a string");
        return j.get<std::string>();
    }
    const json& array() const {
        if (!j.is_array()) fail("expected an array");
        return j;
    }
    double number_or(const std::string& key, double fallback) const {
        return has(key) ? at(key).number() : fallback;
    }
    Field require(const std::string& key) const {
        if (!has(key)) fail("missing key '" + key + "'");
        return at(key);
    }
};

}  // namespace

RawCase parse_raw_case(const std::string& text, Bases& bases) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, location(text, e.byte) + ": " + e.what());
    }
    Field root{doc, ""};
    if (!doc.is_object()) root.fail("case document must be an object");
    int version = root.require("schema_version").integer();
    if (version != kCaseSchemaVersion)
        throw Error(ErrorCode::SchemaVersionUnsupported, "case schema version " + std::to_string(version));

    RawCase raw;
    raw.name = root.has("name") ? root.at("name").string() : std::string("case");
    Field fb = root.require("bases");
    bases.v_kv = fb.require("v_kv").number();
    bases.s_mva = fb.require("s_mva").number();
    raw.slack_v0_pu = root.require("slack_v0").number();
    raw.design_epsilon = root.number_or("design_epsilon", 1.0);
    if (root.has("profiles")) raw.profiles = root.at("profiles").string();

    RawBus defaults;
    if (root.has("defaults")) {
        Field d = root.at("defaults");
        defaults.v_min_pu = d.number_or("v_min", defaults.v_min_pu);
        defaults.v_max_pu = d.number_or("v_max", defaults.v_max_pu);
        defaults.v_target_pu = d.number_or("v_target", defaults.v_target_pu);
        defaults.v_threshold = d.number_or("v_threshold", defaults.v_threshold);
    }

    Field buses = root.require("buses");
    for (std::size_t i = 0; i < buses.array().size(); ++i) {
        Field b = buses.at(i);
        RawBus r = defaults;
        r.id = b.require("id").integer();
        r.load_kw = b.number_or("load_kw", 0.0);
        r.load_kvar = b.number_or("load_kvar", 0.0);
        r.shunt_kw = b.number_or("shunt_kw", 0.0);
        r.shunt_kvar = b.number_or("shunt_kvar", 0.0);
        r.v_min_pu = b.number_or("v_min", r.v_min_pu);
        r.v_max_pu = b.number_or("v_max", r.v_max_pu);
        r.v_target_pu = b.number_or("v_target", r.v_target_pu);
        r.v_threshold = b.number_or("v_threshold", r.v_threshold);
        if (b.has("class")) r.load_class = b.at("class").string();
        if (r.shunt_kw < 0.0) b.at("shunt_kw").fail("must be nonnegative");
        if (!(r.v_min_pu > 0.0 && r.v_min_pu < r.v_max_pu)) b.fail("requires 0 < v_min < v_max");
        if (r.v_threshold < 0.0) b.fail("v_threshold must be nonnegative");
        raw.buses.push_back(r);
    }

    Field lines = root.require("lines");
    for (std::size_t i = 0; i < lines.array().size(); ++i) {
        Field l = lines.at(i);
        RawLine r;
        r.from = l.require("from").integer();
        r.to = l.require("to").integer();
        r.r_ohm = l.require("r_ohm").number();
        r.x_ohm = l.require("x_ohm").number();
        r.ampacity_a = l.require("ampacity_a").number();
        r.p_max_kw = l.require("p_max_kw").number();
        r.q_max_kvar = l.require("q_max_kvar").number();
        if (r.r_ohm < 0.0) l.at("r_ohm").fail("must be nonnegative");
        if (!(r.ampacity_a > 0.0)) l.at("ampacity_a").fail("must be positive");
        raw.lines.push_back(r);
    }

    if (root.has("ibdgs")) {
        Field gs = root.at("ibdgs");
        for (std::size_t i = 0; i < gs.array().size(); ++i) {
            Field g = gs.at(i);
            RawIbdg r;
            r.name = g.require("name").string();
            r.bus = g.require("bus").integer();
            r.dispatchable = g.has("dispatchable") ? g.at("dispatchable").boolean() : true;
            r.p_max_kw = g.require("p_max_kw").number();
            r.q_min_kvar = g.number_or("q_min_kvar", 0.0);
            r.q_max_kvar = g.number_or("q_max_kvar", 0.0);
            r.s_max_kva = g.number_or("s_max_kva", r.p_max_kw);
            r.mu_min = g.number_or("mu_min", 1.0);
            r.availability = g.has("availability") ? g.at("availability").string() : r.name;
            if (g.has("taylor_v0")) r.taylor_v0 = g.at("taylor_v0").number();
            if (r.s_max_kva < r.p_max_kw) g.fail("s_max_kva must be at least p_max_kw");
            if (!(r.mu_min > 0.0 && r.mu_min <= 1.0)) g.at("mu_min").fail("must lie in (0, 1]");
            if (r.q_min_kvar > r.q_max_kvar) g.fail("q_min_kvar exceeds q_max_kvar");
            raw.ibdgs.push_back(r);
        }
    }
    return raw;
}

RadialNetwork parse_case(const std::string& text, const fs::path& origin) {
    Bases bases;
    RawCase raw = parse_raw_case(text, bases);
    RadialNetwork net = to_per_unit(raw, bases);
    if (!net.profiles.empty() && !origin.empty() && fs::path(net.profiles).is_relative())
        net.profiles = (origin.parent_path() / net.profiles).string();
    for (const IbdgSpec& g : net.ibdgs) {
        if (g.bus <= 0 || g.bus >= net.num_buses())
            throw Error(ErrorCode::UnknownId, "ibdg '" + g.name + "' sits on unknown bus " + std::to_string(g.bus));
    }
    auto diags = validate_radial(net);
    if (!diags.empty()) {
        const Diagnostic& d = diags.front();
        ErrorCode code = d.kind == DiagnosticKind::CycleDetected    ? ErrorCode::CycleDetected
                         : d.kind == DiagnosticKind::DisconnectedBus ? ErrorCode::DisconnectedBus
                                                                     : ErrorCode::InvalidIndex;
        throw Error(code, d.message);
    }
    return net;
}

RadialNetwork load_case(const std::string& name_or_path) {
    fs::path p(name_or_path);
    if (!fs::exists(p)) {
        fs::path bundled = data_dir() / (name_or_path + ".json");
        if (fs::exists(bundled)) p = bundled;
        else throw Error(ErrorCode::Io, "no case file or bundled case named '" + name_or_path + "'");
    }
    return parse_case(read_file(p), p);
}

std::string dump_case(const RadialNetwork& net) {
    RawCase raw = to_physical(net);
    json doc;
    doc["schema_version"] = kCaseSchemaVersion;
    doc["name"] = raw.name;
    doc["bases"] = {{"v_kv", net.bases.v_kv}, {"s_mva", net.bases.s_mva}};
    doc["slack_v0"] = raw.slack_v0_pu;
    doc["design_epsilon"] = raw.design_epsilon;
    if (!raw.profiles.empty()) doc["profiles"] = raw.profiles;
    doc["buses"] = json::array();
    for (const RawBus& b : raw.buses) {
        doc["buses"].push_back({{"id", b.id}, {"load_kw", b.load_kw}, {"load_kvar", b.load_kvar},
                                {"shunt_kw", b.shunt_kw}, {"shunt_kvar", b.shunt_kvar},
                                {"v_min", b.v_min_pu}, {"v_max", b.v_max_pu}, {"v_target", b.v_target_pu},
                                {"v_threshold", b.v_threshold}, {"class", b.load_class}});
    }
    doc["lines"] = json::array();
    for (const RawLine& l : raw.lines) {
        doc["lines"].push_back({{"from", l.from}, {"to", l.to}, {"r_ohm", l.r_ohm}, {"x_ohm", l.x_ohm},
                                {"ampacity_a", l.ampacity_a}, {"p_max_kw", l.p_max_kw},
                                {"q_max_kvar", l.q_max_kvar}});
    }
    doc["ibdgs"] = json::array();
    for (const RawIbdg& g : raw.ibdgs) {
        json e = {{"name", g.name}, {"bus", g.bus}, {"dispatchable", g.dispatchable},
                  {"p_max_kw", g.p_max_kw}, {"q_min_kvar", g.q_min_kvar}, {"q_max_kvar", g.q_max_kvar},
                  {"s_max_kva", g.s_max_kva}, {"mu_min", g.mu_min}, {"availability", g.availability}};
        if (g.taylor_v0) e["taylor_v0"] = *g.taylor_v0;
        doc["ibdgs"].push_back(e);
    }
    return doc.dump(1);
}

fs::path default_profiles(const RadialNetwork& network) {
    if (network.profiles.empty())
        throw Error(ErrorCode::Io, "case '" + network.name + "' declares no profile file");
    return fs::path(network.profiles);
}

int minutes_of_day(const std::string& hhmm) {
    auto colon = hhmm.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 3 != hhmm.size())
        throw Error(ErrorCode::ParseError, "time '" + hhmm + "' is not HH:MM");
    int h = 0, m = 0;
    try {
        h = std::stoi(hhmm.substr(0, colon));
        m = std::stoi(hhmm.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "time '" + hhmm + "' is not HH:MM");
    }
    if (h < 0 || h > 24 || m < 0 || m >= 60 || (h == 24 && m != 0))
        throw Error(ErrorCode::ParseError, "time '" + hhmm + "' out of range");
    return 60 * h + m;
}

HorizonSpec window_preset(const std::string& text) {
    HorizonSpec spec;
    if (text == "morning") { spec.start = "07:00"; spec.end = "12:00"; return spec; }
    if (text == "afternoon") { spec.start = "12:00"; spec.end = "21:00"; return spec; }
    if (text == "day" || text.empty()) return spec;
    auto dash = text.find('-');
    if (dash == std::string::npos) throw Error(ErrorCode::ParseError, "window '" + text + "' is not HH:MM-HH:MM");
    spec.start = text.substr(0, dash);
    spec.end = text.substr(dash + 1);
    if (minutes_of_day(spec.start) >= minutes_of_day(spec.end))
        throw Error(ErrorCode::ParseError, "window '" + text + "' is empty");
    return spec;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

ScenarioHorizon parse_profiles(const std::string& text, const RadialNetwork& net, const HorizonSpec& spec) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "profile file is empty");
    auto header = split_csv(line);
    if (header.empty() || header[0] != "time")
        throw Error(ErrorCode::ParseError, "line 1: first column must be 'time'");

    std::map<std::string, int> ibdg_index;
    for (std::size_t i = 0; i < net.ibdgs.size(); ++i) ibdg_index[net.ibdgs[i].availability] = static_cast<int>(i);
    std::vector<int> bus_col(static_cast<std::size_t>(net.num_buses()), -1);
    std::vector<int> ibdg_col(net.ibdgs.size(), -1);
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h.rfind("bus:", 0) == 0) {
            int id = -1;
            try { id = std::stoi(h.substr(4)); } catch (const std::exception&) {}
            if (id <= 0 || id >= net.num_buses()) throw Error(ErrorCode::UnknownId, "profile column '" + h + "'");
            bus_col[static_cast<std::size_t>(id)] = static_cast<int>(c);
        } else if (h.rfind("ibdg:", 0) == 0) {
            auto it = ibdg_index.find(h.substr(5));
            if (it == ibdg_index.end()) throw Error(ErrorCode::UnknownId, "profile column '" + h + "'");
            ibdg_col[static_cast<std::size_t>(it->second)] = static_cast<int>(c);
        } else {
            throw Error(ErrorCode::UnknownId, "profile column '" + h + "'");
        }
    }
    for (int b = 1; b < net.num_buses(); ++b) {
        if (bus_col[static_cast<std::size_t>(b)] < 0 && (net.bus(b).load_p != 0.0 || net.bus(b).load_q != 0.0))
            throw Error(ErrorCode::UnknownId, "missing profile column 'bus:" + std::to_string(b) + "'");
    }
    for (std::size_t i = 0; i < net.ibdgs.size(); ++i) {
        if (ibdg_col[i] < 0) throw Error(ErrorCode::UnknownId, "missing profile column 'ibdg:" + net.ibdgs[i].availability + "'");
    }

    const int t0 = minutes_of_day(spec.start);
    const int t1 = minutes_of_day(spec.end);
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    std::vector<int> stamps;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw Error(ErrorCode::LengthMismatch, "line " + std::to_string(lineno) + ": expected " +
                                                       std::to_string(header.size()) + " cells, found " +
                                                       std::to_string(cells.size()));
        int stamp = minutes_of_day(cells[0]);
        if (!stamps.empty() && stamp <= stamps.back())
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": timestamps must increase");
        std::vector<double> vals(cells.size(), 0.0);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            try {
                std::size_t used = 0;
                vals[c] = std::stod(cells[c], &used);
                if (used != cells[c].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ", column '" + header[c] +
                                                       "': not a number");
            }
            if (vals[c] < 0.0)
                throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ", column '" + header[c] +
                                                       "': negative value");
        }
        stamps.push_back(stamp);
        if (stamp >= t0 && stamp < t1) {
            labels.push_back(cells[0]);
            rows.push_back(vals);
        }
    }
    ScenarioHorizon h;
    if (stamps.size() >= 2) h.step_minutes = stamps[1] - stamps[0];
    for (std::size_t k = 1; k < stamps.size(); ++k) {
        if (stamps[k] - stamps[k - 1] != h.step_minutes)
            throw Error(ErrorCode::LengthMismatch, "profile rows are not evenly spaced");
    }
    const int stride = std::max(1, spec.stride);
    std::vector<std::size_t> keep;
    for (std::size_t k = static_cast<std::size_t>(stride - 1); k < rows.size(); k += static_cast<std::size_t>(stride))
        keep.push_back(k);
    if (keep.empty()) throw Error(ErrorCode::LengthMismatch, "window " + spec.start + "-" + spec.end + " selects no steps");
    h.step_minutes *= stride;
    const auto T = static_cast<Eigen::Index>(keep.size());
    h.load_mult = Eigen::MatrixXd::Ones(T, net.num_buses());
    h.load_mult.col(0).setZero();
    h.p_ava = Eigen::MatrixXd::Zero(T, static_cast<Eigen::Index>(net.ibdgs.size()));
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& vals = rows[keep[static_cast<std::size_t>(t)]];
        h.labels.push_back(labels[keep[static_cast<std::size_t>(t)]]);
        for (int b = 1; b < net.num_buses(); ++b) {
            int c = bus_col[static_cast<std::size_t>(b)];
            if (c >= 0) h.load_mult(t, b) = vals[static_cast<std::size_t>(c)];
        }
        for (std::size_t i = 0; i < net.ibdgs.size(); ++i)
            h.p_ava(t, static_cast<Eigen::Index>(i)) = vals[static_cast<std::size_t>(ibdg_col[i])] * net.ibdgs[i].p_max;
    }
    return h;
}

ScenarioHorizon load_profiles(const fs::path& path, const RadialNetwork& network, const HorizonSpec& spec) {
    return parse_profiles(read_file(path), network, spec);
}

}  // namespace maropf
