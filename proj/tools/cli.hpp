#pragma once

// Command-line front end. Configuration is a flat "key = value" file merged
// with command-line flags; precedence is flag > file > default. Every output
// file starts with a header echoing the artifact version, the command and the
// full effective configuration.
//
// Exit codes: 0 success, 1 computation failure, 2 configuration error. Errors
// raised after the output directory exists also leave error.json there.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctrlcost::cli {

inline constexpr const char* kArtifact = "ctrlcost";
inline constexpr const char* kVersion = "1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Settings = std::map<std::string, std::string>;

struct KeySpec {
  std::string name;
  std::string fallback;
  std::string help;
};

// Keys accepted by a command, in help order. Throws ConfigError for an
// unknown command.
const std::vector<KeySpec>& command_keys(const std::string& command);
std::vector<std::string> command_names();

// "key = value" lines; '#' starts a comment. Unknown keys, repeated keys and
// lines without '=' are ConfigErrors.
Settings parse_config_text(const std::string& text, const std::string& command, const std::string& origin);
Settings read_config_file(const std::string& path, const std::string& command);

// Defaults, then file, then flags.
Settings merge_settings(const std::string& command, const Settings& file, const Settings& flags);

// Value parsers; a trailing "pi" form is accepted for reals ("pi/4", "-2pi", "0.5pi").
double parse_real(const std::string& key, const std::string& text);
int parse_int(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);
std::vector<double> parse_real_list(const std::string& key, const std::string& text);

int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace ctrlcost::cli
