#include "radmat/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace radmat {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::string& section,
                         std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("config: unknown key '" + item.key() + "' in " + section);
        }
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j[key].get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config: bad value for '") + key + "'");
        }
    }
}

RadarConfig parse_radar(const json& j) {
    reject_unknown_keys(j, "radar",
                        {"num_adc_samples", "num_range_bins", "range_resolution_m",
                         "frames_per_sequence", "noise_sigma", "amplitude_ref",
                         "reference_range_m", "placement_sigma_m", "master_seed"});
    RadarConfig cfg;
    read_field(j, "num_adc_samples", cfg.num_adc_samples);
    read_field(j, "num_range_bins", cfg.num_range_bins);
    read_field(j, "range_resolution_m", cfg.range_resolution_m);
    read_field(j, "frames_per_sequence", cfg.frames_per_sequence);
    read_field(j, "noise_sigma", cfg.noise_sigma);
    read_field(j, "amplitude_ref", cfg.amplitude_ref);
    read_field(j, "reference_range_m", cfg.reference_range_m);
    read_field(j, "placement_sigma_m", cfg.placement_sigma_m);
    read_field(j, "master_seed", cfg.master_seed);
    return cfg;
}

MaterialSpec parse_material(const json& j) {
    reject_unknown_keys(j, "materials entry",
                        {"name", "class_id", "reflectivity", "specular_fraction",
                         "lobe_width_deg", "texture_sigma"});
    MaterialSpec m;
    read_field(j, "name", m.name);
    read_field(j, "class_id", m.class_id);
    read_field(j, "reflectivity", m.reflectivity);
    read_field(j, "specular_fraction", m.specular_fraction);
    read_field(j, "lobe_width_deg", m.lobe_width_deg);
    read_field(j, "texture_sigma", m.texture_sigma);
    return m;
}

Scenario parse_scenario_json(const json& j, int& sequences_per_class) {
    reject_unknown_keys(j, "scenario",
                        {"name", "height_m", "tilt_deg", "num_sessions", "height_range_m",
                         "tilt_range_deg", "sequences_per_class"});
    std::string name = "nominal";
    read_field(j, "name", name);

    Scenario s;
    if (name == "nominal") {
        s = Scenario::nominal();
        read_field(j, "height_m", s.height_m);
    } else if (name == "height") {
        double h = 0.45;
        read_field(j, "height_m", h);
        s = Scenario::height(h);
    } else if (name == "tilt") {
        double t = 0.0;
        read_field(j, "tilt_deg", t);
        s = Scenario::tilt(t);
        read_field(j, "height_m", s.height_m);
    } else if (name == "session") {
        int k = 4;
        read_field(j, "num_sessions", k);
        s = Scenario::session(k);
        read_field(j, "height_m", s.height_m);
    } else if (name == "augmented") {
        s = Scenario::augmented(0.35, 0.55, -10.0, 10.0);
        if (j.contains("height_range_m")) {
            const auto r = j["height_range_m"].get<std::vector<double>>();
            if (r.size() != 2) throw ConfigError("config: height_range_m must be [min, max]");
            s.height_min_m = r[0];
            s.height_max_m = r[1];
        }
        if (j.contains("tilt_range_deg")) {
            const auto r = j["tilt_range_deg"].get<std::vector<double>>();
            if (r.size() != 2) throw ConfigError("config: tilt_range_deg must be [min, max]");
            s.tilt_min_deg = r[0];
            s.tilt_max_deg = r[1];
        }
    } else {
        throw ConfigError("config: unknown scenario name '" + name + "'");
    }
    read_field(j, "sequences_per_class", sequences_per_class);
    s.validate();
    return s;
}

}  // namespace

std::vector<MaterialSpec> default_materials() {
    return {
        {"iron", 0, 0.95, 0.95, 4.7, 0.015},
        {"aluminum", 1, 0.90, 0.95, 5.2, 0.015},
        {"plexiglass", 2, 0.10, 0.60, 8.0, 0.06},
        {"wood", 3, 0.15, 0.20, 20.0, 0.08},
        {"limestone", 4, 0.30, 0.35, 10.0, 0.06},
    };
}

AppConfig default_config() {
    AppConfig cfg;
    cfg.materials = default_materials();
    cfg.scenario = Scenario::nominal();
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(j, "config", {"radar", "materials", "scenario"});

    AppConfig cfg = default_config();
    if (j.contains("radar")) cfg.radar = parse_radar(j["radar"]);
    if (j.contains("materials")) {
        if (!j["materials"].is_array() || j["materials"].size() != 5) {
            throw ConfigError("config: materials must be an array of 5 entries");
        }
        cfg.materials.clear();
        for (const auto& m : j["materials"]) cfg.materials.push_back(parse_material(m));
        std::vector<bool> seen(5, false);
        for (const auto& m : cfg.materials) {
            m.validate();
            if (seen[static_cast<std::size_t>(m.class_id)]) {
                throw ConfigError("config: duplicate class_id " + std::to_string(m.class_id));
            }
            seen[static_cast<std::size_t>(m.class_id)] = true;
        }
    }
    if (j.contains("scenario")) {
        cfg.scenario = parse_scenario_json(j["scenario"], cfg.sequences_per_class);
    }
    cfg.radar.validate();
    return cfg;
}

Scenario parse_scenario(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);

    auto parse_double = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("scenario: bad numeric argument '" + s + "'");
        }
    };

    if (head == "nominal") {
        if (!tail.empty()) throw ConfigError("scenario: 'nominal' takes no argument");
        return Scenario::nominal();
    }
    if (head == "height") {
        if (tail.empty()) throw ConfigError("scenario: 'height' needs a height in meters");
        return Scenario::height(parse_double(tail));
    }
    if (head == "tilt") {
        if (tail.empty()) throw ConfigError("scenario: 'tilt' needs an angle in degrees");
        return Scenario::tilt(parse_double(tail));
    }
    if (head == "session") {
        if (tail.empty()) throw ConfigError("scenario: 'session' needs a session count");
        return Scenario::session(std::stoi(tail));
    }
    if (head == "augmented") {
        Scenario s = Scenario::augmented(0.35, 0.55, -10.0, 10.0);
        if (!tail.empty()) {
            std::istringstream args(tail);
            std::string cell;
            std::vector<double> vals;
            while (std::getline(args, cell, ',')) vals.push_back(parse_double(cell));
            if (vals.size() != 4) {
                throw ConfigError("scenario: 'augmented' takes h_min,h_max,t_min,t_max");
            }
            s = Scenario::augmented(vals[0], vals[1], vals[2], vals[3]);
        }
        return s;
    }
    throw ConfigError("unknown scenario '" + text + "'");
}

std::string config_fingerprint(const RadarConfig& radar,
                               std::span<const MaterialSpec> materials,
                               std::uint64_t master_seed, const std::string& extra) {
    std::ostringstream canon;
    canon << "radar|" << radar.num_adc_samples << '|' << radar.num_range_bins << '|'
          << fmt_g(radar.range_resolution_m, 17) << '|' << radar.frames_per_sequence << '|'
          << fmt_g(radar.noise_sigma, 17) << '|' << fmt_g(radar.amplitude_ref, 17) << '|'
          << fmt_g(radar.reference_range_m, 17) << '|'
          << fmt_g(radar.placement_sigma_m, 17) << ';';
    for (const auto& m : materials) {
        canon << "mat|" << m.name << '|' << m.class_id << '|' << fmt_g(m.reflectivity, 17) << '|'
              << fmt_g(m.specular_fraction, 17) << '|' << fmt_g(m.lobe_width_deg, 17) << '|'
              << fmt_g(m.texture_sigma, 17) << ';';
    }
    canon << "seed|" << master_seed << ';' << extra;
    return hex64(fnv1a(canon.str()));
}

}  // namespace radmat
