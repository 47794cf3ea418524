#include "workbench/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "json.hpp"
#include "workbench/experiment.hpp"

namespace workbench::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::optional<std::string> canned_config(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e.json;
  return std::nullopt;
}

std::string load_config_text(const std::string& path_or_name) {
  std::error_code ec;
  if (fs::is_regular_file(path_or_name, ec)) {
    std::ifstream in(path_or_name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in && !in.eof()) throw ConfigError("<config>", "cannot read " + path_or_name);
    return ss.str();
  }
  if (auto text = canned_config(path_or_name)) return *text;
  throw ConfigError("<config>", "no file or canned config named '" + path_or_name + "' (see 'expcli list')");
}

namespace {

ExperimentConfig load(const std::string& config, const std::vector<std::string>& overrides) {
  std::string text = load_config_text(config);
  if (!overrides.empty()) text = apply_overrides(text, overrides);
  ExperimentConfig c = ExperimentConfig::from_json(text);
  if (const char* ep = std::getenv("WORKBENCH_REMOTE_ENDPOINT"); ep && *ep) c.resolve_endpoints(ep);
  return c;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

void report(std::ostream& err, const ConfigError& e) { err << "error: " << e.what() << '\n'; }

template <class Writer>
void write_file(const fs::path& p, Writer&& w) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  w(f);
  f.flush();
  if (!f) throw std::runtime_error("write to " + p.string() + " failed");
}

json versions() {
  return {{"workbench", version()},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

}  // namespace

int cli_list(std::ostream& out) {
  for (const auto& e : catalog()) {
    const auto j = json::parse(e.json);
    out << std::left << std::setw(18) << e.name << ' ' << std::setw(9) << j.value("kind", "") << ' '
        << "replicates=" << j.value("replicates", 1) << '\n';
  }
  return kOk;
}

int cli_show(const std::string& config, const std::vector<std::string>& overrides, std::ostream& out,
             std::ostream& err) {
  try {
    out << load(config, overrides).to_json(true) << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    report(err, e);
    return kValidation;
  }
}

int cli_validate(const std::string& config, const std::vector<std::string>& overrides, std::ostream& out,
                 std::ostream& err) {
  try {
    const auto c = load(config, overrides);
    c.validate();
    out << "ok: " << c.name << " (" << to_string(c.kind) << "), " << c.estimators.size() << " estimators, "
        << c.replicates << " replicates, config hash " << hex64(c.hash()) << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    report(err, e);
    return kValidation;
  }
}

int cli_run(const std::string& config, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  ExperimentConfig c;
  try {
    c = load(config, opts.overrides);
    c.validate();
  } catch (const ConfigError& e) {
    report(err, e);
    return kValidation;
  }
  const unsigned jobs = opts.jobs ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
  const fs::path dir = !opts.out_dir.empty() ? fs::path(opts.out_dir)
                       : !c.output.empty()    ? fs::path(c.output)
                                              : fs::path("runs") / c.name;

  RunResult r;
  std::string fatal;
  try {
    r = run_replicated(c, jobs);
  } catch (const std::exception& e) {
    fatal = e.what();
  }

  try {
    fs::create_directories(dir);
    write_file(dir / "records.csv", [&](std::ostream& f) { write_records_csv(f, r.records); });
    write_file(dir / "records.jsonl", [&](std::ostream& f) { write_records_jsonl(f, r.records); });
    write_file(dir / "aggregate.csv", [&](std::ostream& f) { write_aggregate_csv(f, aggregate(r.records)); });
    write_file(dir / "thetas.csv", [&](std::ostream& f) { write_thetas_csv(f, r.thetas); });

    json errors = json::array();
    for (const auto& e : r.errors)
      errors.push_back({{"replicate", e.replicate}, {"estimator", e.estimator}, {"message", e.message}});
    if (!fatal.empty()) errors.push_back({{"replicate", nullptr}, {"estimator", nullptr}, {"message", fatal}});
    json manifest{{"name", c.name},
                  {"kind", to_string(c.kind)},
                  {"config_hash", hex64(c.hash())},
                  {"seed", *c.seed},
                  {"replicates", c.replicates},
                  {"jobs", jobs},
                  {"status", errors.empty() ? "ok" : "partial"},
                  {"records", r.records.size()},
                  {"theta_star", r.theta_star},
                  {"notes", r.notes},
                  {"errors", errors},
                  {"versions", versions()},
                  {"config", json::parse(c.to_json(true))}};
    write_file(dir / "manifest.json", [&](std::ostream& f) { f << manifest.dump(2) << '\n'; });
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }

  out << c.name << ": " << r.records.size() << " records, " << r.errors.size() << " errors -> " << dir.string()
      << '\n';
  if (!fatal.empty()) {
    err << "error: run failed: " << fatal << '\n';
    return kRuntime;
  }
  if (!r.errors.empty()) {
    for (const auto& e : r.errors)
      err << "error: replicate " << e.replicate << ", estimator " << e.estimator << ": " << e.message << '\n';
    return kRuntime;
  }
  return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Replicated simulation experiments", "expcli"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  std::string config;
  RunOptions opts;

  auto* run = app.add_subcommand("run", "Run an experiment and write records, aggregates and a manifest");
  run->add_option("config", config, "Config file or canned config name")->required();
  run->add_option("--set", opts.overrides, "Dotted-path override key=value (repeatable)");
  run->add_option("--jobs", opts.jobs, "Worker threads (default: all cores)")->check(CLI::Range(1u, 1024u));
  run->add_option("--out", opts.out_dir, "Output directory");

  app.add_subcommand("list", "List canned configs");

  std::vector<std::string> overrides;
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", config, "Config file or canned config name")->required();
  validate->add_option("--set", overrides, "Dotted-path override key=value (repeatable)");

  auto* show = app.add_subcommand("show", "Print the normalized config");
  show->add_option("config", config, "Config file or canned config name")->required();
  show->add_option("--set", overrides, "Dotted-path override key=value (repeatable)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    // Subcommand help requests also surface here.
    if (e.get_exit_code() == 0) return kOk;
    return kValidation;
  }

  if (run->parsed()) return cli_run(config, opts, out, err);
  if (validate->parsed()) return cli_validate(config, overrides, out, err);
  if (show->parsed()) return cli_show(config, overrides, out, err);
  return cli_list(out);
}

}  // namespace workbench::cli
