#pragma once

#include "gwlab/evolve.hpp"

#include <map>
#include <string>

namespace gwlab {

inline constexpr const char* kVersion = "gwlab 0.1.0";

// single-file structured-text configuration: "key = value" lines, '#'
// comments. Unknown keys and malformed values are reported with their line.
struct ParsedConfig {
  RunConfig run;
  std::string bprofile_file;  // optional initial b profile
  std::string out_dir = "out";
  std::map<std::string, std::string> echo;  // every key, defaults included
};

ParsedConfig parse_config_text(const std::string& text);
ParsedConfig parse_config_file(const std::string& path);
std::string config_echo_text(const ParsedConfig& c);

// run manifest: config snapshot, code version, output inventory with checksums
void write_manifest(const std::string& dir, const ParsedConfig& cfg,
                    const std::vector<std::string>& files);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gwlab
