// pipret: command-line front end. Flags override values from --config.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pipret/cli.hpp"

namespace {

using pipret::cli::json;

struct Opt {
  const char* key;
  const char* help;
};

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"capacity", "rate bounds over a grid of K, P, N"},
      {"spectrum", "eigenvalues of the difference chain"},
      {"converge", "distance to uniform by file length"},
      {"simulate", "run a retrieval scheme and report download cost"},
      {"audit", "check query privacy of a scheme"},
      {"ml-demo", "train on a privately retrieved Gram matrix"},
      {"reproduce", "run the acceptance criteria"},
  };
  return d;
}

const std::map<std::string, std::vector<Opt>>& option_table() {
  static const std::map<std::string, std::vector<Opt>> table = {
      {"capacity",
       {{"K", "files, e.g. 2, 2..6 or 2,4"},
        {"P", "requested inner products (range)"},
        {"N", "servers (range)"},
        {"L", "file length; adds the finite-length correction"},
        {"q", "field size for the finite-length correction"},
        {"c", "constant for the correction (default: fitted)"}}},
      {"spectrum", {{"q", "field size"}, {"K", "files"}}},
      {"converge", {{"q", "field size"}, {"K", "files"}, {"Lmax", "largest length"}}},
      {"simulate",
       {{"scheme", "full_download | repeated_pir | planted_leak"},
        {"q", "field size"},
        {"K", "files (virtual files are all pairs)"},
        {"T", "virtual files, when K is not given"},
        {"L", "file length when K is given"},
        {"N", "servers"},
        {"P", "requested inner products"},
        {"nu", "database instances per retrieval"},
        {"seeds", "number of runs"},
        {"master_seed", "seed for all runs"}}},
      {"audit",
       {{"scheme", "full_download | repeated_pir | planted_leak"},
        {"mode", "exact | sampled"},
        {"samples", "query plans drawn per request set"},
        {"q", "field size"},
        {"K", "files"},
        {"T", "virtual files"},
        {"N", "servers"},
        {"P", "requested inner products"},
        {"nu", "database instances"},
        {"master_seed", "seed"}}},
      {"ml-demo",
       {{"task", "svm | regression | pca"},
        {"data", "dataset CSV with a header row"},
        {"label", "label column name"},
        {"scale", "fixed-point scale"},
        {"q", "field modulus"},
        {"max_abs", "bound on |x| used by the wraparound guard"},
        {"N", "servers"},
        {"d", "PCA components"},
        {"box", "SVM box constraint (default hard margin)"},
        {"master_seed", "seed"}}},
      {"reproduce",
       {{"master_seed", "seed"}, {"inject_fault", "deliberately break a component (delta-off-by-one)"}}},
  };
  return table;
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pipret;
  CLI::App app{"Private inner-product retrieval toolkit"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path, format;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON file {\"command\": ..., \"params\": {...}}");
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--print-config", print_config, "print the merged config and exit");

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  bool verbose = false, direct = false, no_augment = false;
  for (const auto& [name, opts] : option_table()) {
    auto* sub = app.add_subcommand(name, descriptions().at(name));
    subs[name] = sub;
    for (const auto& o : opts) sub->add_option(flag_name(o.key), values[name][o.key], o.help);
    if (name == "capacity" || name == "spectrum") sub->add_flag("--verbose", verbose, "extra diagnostics");
    if (name == "ml-demo") {
      sub->add_flag("--direct", direct, "compute the Gram matrix in the clear");
      sub->add_flag("--private", "retrieve the Gram matrix through the simulator (default)");
      sub->add_flag("--no-augment", no_augment, "regression without a bias term");
    }
  }
  subs["reproduce"]->add_option("--seed", values["reproduce"]["master_seed"], "alias for --master-seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kValidation;
  }

  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;

  try {
    cli::RunConfig config;
    if (!config_path.empty()) {
      config = cli::load_config(config_path);
      if (config.command != command)
        throw ValidationError("config is for '" + config.command + "' but the subcommand is '" + command + "'");
    }
    config.command = command;
    auto* sub = subs[command];
    for (const auto& o : option_table().at(command)) {
      if (sub->count(flag_name(o.key)) > 0 || (command == "reproduce" && o.key == std::string("master_seed") && sub->count("--seed") > 0))
        config.params[o.key] = values[command][o.key];
    }
    if (verbose) config.params["verbose"] = true;
    if (direct) config.params["private"] = false;
    if (command == "ml-demo" && sub->count("--private") > 0) config.params["private"] = true;
    if (no_augment) config.params["augmented"] = false;
    if (!out_path.empty()) config.output = out_path;
    if (!format.empty()) config.format = format;

    if (print_config) {
      std::cout << json(config).dump(2) << "\n";
      return cli::kOk;
    }
    const auto report = cli::dispatch(config);
    cli::emit(config, report);
    return report.passed ? cli::kOk : cli::kAcceptance;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kValidation;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return cli::kValidation;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return cli::kIo;
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "protocol error: %s\n", e.what());
    return cli::kAcceptance;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kValidation;
  }
}
