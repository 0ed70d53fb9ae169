// Command-line front end: ingest -> split -> seed -> mine -> eval -> rarity, or all at once with `run`.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dirac/error.hpp"
#include "dirac/pipeline.hpp"

namespace {

using dirac::pipeline::ConfigMap;

std::string hyphenated(std::string key) {
  for (auto& ch : key) {
    if (ch == '_') ch = '-';
  }
  return key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diverse and rare seen-class selection for zero-shot learning"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "key = value configuration file");

  ConfigMap flags;
  for (const auto& [key, _] : dirac::pipeline::default_config()) {
    std::string names = "--" + hyphenated(key);
    if (hyphenated(key) != key) names += ",--" + key;
    if (key == "repeats") names += ",--repeat";
    app.add_option(names, flags[key], "override '" + key + "'");
  }

  std::size_t index = 0;
  std::string which = "PS";
  auto* ingest = app.add_subcommand("ingest", "validate inputs and write normalized copies");
  auto* split = app.add_subcommand("split", "draw U_com and write the split definition");
  auto* seed = app.add_subcommand("seed", "cluster the object domain and build the seed set");
  auto* mine = app.add_subcommand("mine", "grow the seed set to n_s classes");
  auto* eval = app.add_subcommand("eval", "evaluate ES or PS on U_com");
  auto* rarity = app.add_subcommand("rarity", "designate rare/common attributes and filter reports");
  auto* run = app.add_subcommand("run", "full pipeline over every repeat");
  for (auto* sub : {split, seed, mine, eval, rarity}) {
    sub->add_option("--index", index, "repeat index of the artifacts to use")->capture_default_str();
  }
  eval->add_option("--which", which, "ES or PS")->check(CLI::IsMember({"ES", "PS"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ConfigMap file;
    if (!config_file.empty()) file = dirac::pipeline::load_config_file(config_file);
    const ConfigMap env = dirac::pipeline::environment_overrides();
    ConfigMap given;
    for (const auto& [key, value] : flags) {
      if (app.count("--" + hyphenated(key)) > 0) given[key] = value;
    }
    const auto config = dirac::pipeline::parse_config(dirac::pipeline::merge({&file, &env, &given}));

    if (run->parsed()) {
      dirac::pipeline::run_pipeline(config);
      return 0;
    }
    std::filesystem::create_directories(config.out_dir);
    const auto data = dirac::pipeline::load_dataset(config);
    if (ingest->parsed()) {
      std::cout << dirac::pipeline::ingest(config, data).dump(2) << '\n';
    } else if (split->parsed()) {
      dirac::pipeline::split_stage(config, data, index);
    } else if (seed->parsed()) {
      dirac::pipeline::seed_stage(config, data, index);
    } else if (mine->parsed()) {
      dirac::pipeline::mine_stage(config, data, index);
    } else if (eval->parsed()) {
      const auto tag = which == "ES" ? dirac::zsl::SplitTag::existing : dirac::zsl::SplitTag::proposed;
      const auto report = dirac::pipeline::eval_stage(config, data, index, tag);
      std::cout << which << " mean per-class top-1: " << report.mean_per_class_top1 << '\n';
    } else if (rarity->parsed()) {
      dirac::pipeline::rarity_stage(config, data, index);
    }
    return 0;
  } catch (const dirac::Error& e) {
    spdlog::error("{}", e.what());
    return dirac::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("cli: {}", e.what());
    return dirac::exit_code(dirac::ErrorKind::data_format);
  } catch (const std::exception& e) {
    spdlog::error("cli: {}", e.what());
    return 1;
  }
}
