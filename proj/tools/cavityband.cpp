#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavityband/cli/commands.hpp"
#include "cavityband/cli/run_config.hpp"
#include "cavityband/error.hpp"
#include "cavityband/io/config.hpp"

namespace cb = cavityband;

namespace {

int run(const std::string& command, const std::string& config_path,
        const std::vector<std::string>& overrides) {
  cb::io::ConfigTree tree;
  if (!config_path.empty()) tree = cb::io::load_config_file(config_path);
  if (const char* out = std::getenv("CAVITYBAND_OUT"); out && *out) tree["output"]["dir"] = std::string(out);
  for (const auto& o : overrides) cb::io::apply_override(tree, o);
  const auto config = cb::cli::make_run_config(tree);

  if (command == "sweep") {
    const auto res = cb::cli::cmd_sweep(config);
    for (const auto& cell : res.cells)
      if (!cell.ok) std::cerr << cell.dir << ": " << cell.error << "\n";
    std::cout << res.succeeded() << "/" << res.cells.size() << " cells succeeded; index at "
              << config.output.dir << "/index.csv\n";
    return res.succeeded() > 0 ? 0 : 3;
  }
  const auto bundle = cb::cli::run_command(command, config);
  cb::cli::write_bundle(config, bundle);
  if (bundle.extra_json.count("report.json")) {
    const auto& warning = bundle.extra_json.at("report.json").at("warning");
    if (!warning.get<std::string>().empty()) std::cerr << "warning: " << warning.get<std::string>() << "\n";
  }
  std::cout << "wrote " << command << " output to " << config.output.dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dressed-state band structure and wave-packet dynamics of an atom in a cavity field"};
  app.set_version_flag("--version", cb::cli::kVersion);
  app.require_subcommand(1);
  std::string config_path;
  for (const auto& name : cb::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "TOML-style or JSON config file");
    sub->allow_extras();
    sub->footer("Any key can be overridden with --section.key=value, e.g. --model.g0=0.05");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  std::vector<std::string> overrides;
  for (const auto& extra : sub->remaining()) {
    if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos) {
      std::cerr << "error: unexpected argument '" << extra << "' (overrides look like --section.key=value)\n";
      return 2;
    }
    overrides.push_back(extra);
  }
  try {
    return run(sub->get_name(), config_path, overrides);
  } catch (const cb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cb::cli::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
