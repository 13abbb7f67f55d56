#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "apdet/errors.hpp"
#include "apdet/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite-section determinant experiments"};
  app.set_version_flag("--version", apdet::version());
  app.require_subcommand(1);

  std::string config_path, out_path;
  unsigned threads = 1;
  bool force = false;
  for (const auto& kind : apdet::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, kind + " experiment");
    sub->add_option("--config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "CSV output (stdout when omitted)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));
    sub->add_flag("--force", force, "evaluate constants despite small denominators");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string kind = app.get_subcommands().front()->get_name();

  nlohmann::json config;
  try {
    std::ifstream in(config_path);
    config = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "apdet: cannot read " << config_path << ": " << e.what() << "\n";
    return 1;
  }
  const auto findings = apdet::validate(kind, config);
  for (const auto& f : findings) {
    std::cerr << (f.severity == apdet::Finding::Severity::error ? "error: " : "warning: ") << f.message << "\n";
  }
  if (apdet::has_errors(findings)) return 1;

  apdet::ExperimentResult result;
  try {
    result = apdet::run_experiment(kind, config, {threads, force});
  } catch (const apdet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (out_path.empty()) {
    apdet::write_csv(result, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "apdet: cannot write " << out_path << "\n";
      return 1;
    }
    apdet::write_csv(result, out);
  }
  if (result.status != 0) std::cerr << "apdet: " << result.failure << "\n";
  return result.status;
}
