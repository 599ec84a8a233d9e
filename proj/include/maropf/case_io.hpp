#pragma once

#include "maropf/grid.hpp"

#include <filesystem>
#include <string>

namespace maropf {

inline constexpr int kCaseSchemaVersion = 1;

// Directory holding the bundled cases (compile-time default, MAROPF_DATA_DIR overrides).
std::filesystem::path data_dir();

// `name_or_path` is either a file path or a bundled case name ("ieee34", "ieee85").
RadialNetwork load_case(const std::string& name_or_path);
RadialNetwork parse_case(const std::string& text, const std::filesystem::path& origin = {});
RawCase parse_raw_case(const std::string& text, Bases& bases);
std::string dump_case(const RadialNetwork& network);

// Path of the profile file declared by a case (resolved next to the case file).
std::filesystem::path default_profiles(const RadialNetwork& network);

struct HorizonSpec {
    std::string start = "00:00";  // inclusive
    std::string end = "24:00";    // exclusive
    int stride = 1;               // keep the last step of every block of `stride`
};

// Scenario presets: "morning" 07:00-12:00, "afternoon" 12:00-21:00, "day".
HorizonSpec window_preset(const std::string& text);

ScenarioHorizon load_profiles(const std::filesystem::path& path, const RadialNetwork& network,
                              const HorizonSpec& spec = {});
ScenarioHorizon parse_profiles(const std::string& text, const RadialNetwork& network,
                               const HorizonSpec& spec = {});

int minutes_of_day(const std::string& hhmm);

}  // namespace maropf
