#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace workbench::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

struct CatalogEntry {
  std::string name;
  std::string json;
};

/// Canned configs shipped with the tool, in listing order.
const std::vector<CatalogEntry>& catalog();
std::optional<std::string> canned_config(const std::string& name);

/// Reads a config file, or falls back to a catalog name. Throws ConfigError
/// when neither exists.
std::string load_config_text(const std::string& path_or_name);

struct RunOptions {
  std::vector<std::string> overrides;
  unsigned jobs = 0;    // 0: hardware concurrency
  std::string out_dir;  // empty: config output, else runs/<name>
};

int cli_run(const std::string& config, const RunOptions& opts, std::ostream& out, std::ostream& err);
int cli_list(std::ostream& out);
int cli_validate(const std::string& config, const std::vector<std::string>& overrides, std::ostream& out,
                 std::ostream& err);
int cli_show(const std::string& config, const std::vector<std::string>& overrides, std::ostream& out,
             std::ostream& err);

/// Full command line without the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace workbench::cli
