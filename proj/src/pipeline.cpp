#include "dirac/pipeline.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "dirac/error.hpp"
#include "dirac/rarity.hpp"
#include "dirac/seedset.hpp"
#include "dirac/vsm.hpp"

namespace dirac::pipeline {

namespace fs = std::filesystem;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data_format, "cli", "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data_format, "cli", path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::data_format, "cli", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const PipelineConfig& config) {
  if (config.synthetic) {
    auto syn = catalog::generate_synthetic(config.synthetic_params);
    return {std::move(syn.catalog), std::move(syn.features)};
  }
  auto attrs = catalog::normalize_attributes(catalog::load_attribute_matrix(config.attributes), config.attribute_scale);
  std::vector<catalog::SidecarEntry> sidecar;
  if (!config.catalog.empty()) sidecar = catalog::load_catalog_sidecar(config.catalog);
  auto store = catalog::load_feature_store(config.features, attrs.num_classes());
  Dataset data;
  data.catalog = catalog::build_catalog(std::move(attrs), sidecar, &store);
  data.features = std::move(store);
  return data;
}

namespace {

std::string repeat_name(const char* stem, std::size_t repeat, const char* extension) {
  return std::string(stem) + "_r" + std::to_string(repeat) + extension;
}

std::uint64_t repeat_seed(const PipelineConfig& config, std::size_t repeat) { return config.seed + repeat; }

nlohmann::json stamped(const PipelineConfig& config, std::size_t repeat, nlohmann::json body) {
  body["config_digest"] = config.digest;
  body["rng_seed"] = repeat_seed(config, repeat);
  return body;
}

catalog::SplitDefinition load_split(const PipelineConfig& config, std::size_t repeat) {
  return catalog::split_from_json(read_json(split_path(config, repeat)));
}

void save_split(const PipelineConfig& config, std::size_t repeat, const catalog::SplitDefinition& split,
                const catalog::ClassCatalog& cat) {
  write_json(split_path(config, repeat), stamped(config, repeat, catalog::to_json(split, cat)));
}

}  // namespace

fs::path split_path(const PipelineConfig& c, std::size_t r) { return c.out_dir / repeat_name("split", r, ".json"); }
fs::path seedset_path(const PipelineConfig& c, std::size_t r) { return c.out_dir / repeat_name("seedset", r, ".json"); }
fs::path trace_path(const PipelineConfig& c, std::size_t r) { return c.trace_dir / repeat_name("trace", r, ".jsonl"); }
fs::path rarity_path(const PipelineConfig& c, std::size_t r) { return c.out_dir / repeat_name("rarity", r, ".json"); }
fs::path report_path(const PipelineConfig& c, std::size_t r, zsl::SplitTag tag, const char* extension) {
  const std::string stem = std::string("report_") + zsl::to_string(tag);
  return c.out_dir / repeat_name(stem.c_str(), r, extension);
}

nlohmann::json ingest(const PipelineConfig& config, const Dataset& data) {
  const auto& cat = data.catalog;
  auto zero = cat.attributes.zero_columns();
  nlohmann::json summary = {
      {"classes", cat.size()},
      {"attributes", cat.attributes.num_attributes()},
      {"samples", data.features.size()},
      {"feature_dim", data.features.dim()},
      {"existing_seen", cat.existing_seen().size()},
      {"existing_unseen", cat.existing_unseen().size()},
      {"overlapping", std::count_if(cat.classes.begin(), cat.classes.end(),
                                    [](const auto& c) { return c.overlaps_pretraining; })},
      {"zero_attribute_columns", zero},
      {"config_digest", config.digest},
  };
  fs::create_directories(config.out_dir);
  write_json(config.out_dir / "ingest.json", summary);
  catalog::write_attribute_matrix(config.out_dir / "attributes.normalized.tsv", cat.attributes);
  catalog::write_catalog_sidecar(config.out_dir / "catalog.sidecar", cat);
  return summary;
}

catalog::SplitDefinition split_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat) {
  catalog::SplitDefinition split = catalog::make_split(data.catalog, repeat_seed(config, repeat));
  if (config.n_s >= split.object_domain().size()) {
    throw Error(ErrorKind::config, "cli", "n_s = " + std::to_string(config.n_s) + " must be smaller than the object domain (" +
                                              std::to_string(split.object_domain().size()) + " classes)");
  }
  split.validate();
  save_split(config, repeat, split, data.catalog);
  return split;
}

void seed_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat) {
  const auto split = load_split(config, repeat);
  const ClassSet domain = split.object_domain();
  const auto stage1 = seedset::build_seed_set(data.catalog, domain, config.cluster_lower_bound);
  if (stage1.seeds.size() > config.n_s) {
    throw Error(ErrorKind::config, "cli", "seed set of " + std::to_string(stage1.seeds.size()) +
                                              " classes already exceeds n_s = " + std::to_string(config.n_s));
  }
  write_json(seedset_path(config, repeat), stamped(config, repeat, seedset::to_json(stage1, domain, data.catalog)));
}

void mine_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat) {
  auto split = load_split(config, repeat);
  const auto seeds = seedset::seed_set_from_json(read_json(seedset_path(config, repeat)));

  vsm::VsmConfig vc;
  vc.q = config.q;
  vc.t = config.t;
  if (vc.t == 0) {
    const double avg = static_cast<double>(data.features.size()) / static_cast<double>(data.catalog.size());
    vc.t = vsm::compute_t(avg);
  }
  vc.head = {config.lr, config.momentum, config.batch_size, config.epochs};
  vc.distance_blend = config.distance_blend;
  vc.rng_seed = repeat_seed(config, repeat);

  const auto result = vsm::run_vsm(seeds, data.catalog, data.features, split.object_domain(), vc, config.n_s);

  const fs::path trace = trace_path(config, repeat);
  if (trace.has_parent_path()) fs::create_directories(trace.parent_path());
  std::ofstream out(trace);
  if (!out) throw Error(ErrorKind::data_format, "cli", "cannot write " + trace.string());
  for (const auto& it : result.trace) {
    auto rec = vsm::to_json(it);
    rec["t"] = vc.t;
    out << stamped(config, repeat, std::move(rec)).dump() << '\n';
  }

  split.seen_proposed = make_class_set(result.seeds.members);
  split.validate();
  save_split(config, repeat, split, data.catalog);
  spdlog::info("repeat {}: {} VSM iterations, {} samples queried", repeat, result.trace.size(), result.total_queried);
}

zsl::EvalReport eval_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat, zsl::SplitTag which) {
  const auto split = load_split(config, repeat);
  if (which == zsl::SplitTag::proposed && split.seen_proposed.empty()) {
    throw Error(ErrorKind::config, "cli", "split has no proposed seen set; run 'mine' first");
  }
  zsl::EvaluateOptions options;
  options.hyper = config.eszsl;
  const fs::path& predictions = which == zsl::SplitTag::existing ? config.predictions_es : config.predictions_ps;
  if (!predictions.empty()) options.external_predictions = zsl::load_external_predictions(predictions);

  const auto report = zsl::evaluate_split(split, which, data.catalog, data.features, options);
  auto j = zsl::to_json(report, data.catalog);
  j["model"] = predictions.empty() ? "ESZSL" : "external";
  write_json(report_path(config, repeat, which, ".json"), stamped(config, repeat, j));
  zsl::write_report_csv(report_path(config, repeat, which, ".csv"), report, data.catalog);
  return report;
}

namespace {

rarity::SummaryRow rarity_for_repeat(const PipelineConfig& config, const Dataset& data, std::size_t repeat) {
  const auto split = load_split(config, repeat);
  const ClassSet domain = split.object_domain();
  const auto designation = rarity::designate_rare_common(data.catalog.semantics(domain),
                                                         {config.rare_threshold, config.common_threshold});
  rarity::SummaryRow row;
  row.split = std::to_string(repeat + 1);
  row.rare = designation.rare.size();
  row.common = designation.common.size();
  row.rare_classes = rarity::exhibiting_count(split.common_unseen, designation, data.catalog, zsl::FilterTag::rare);
  row.common_classes = rarity::exhibiting_count(split.common_unseen, designation, data.catalog, zsl::FilterTag::common);

  nlohmann::json j = {
      {"designation", rarity::to_json(designation, data.catalog.attributes)},
      {"A_R", row.rare},
      {"A_C", row.common},
      {"Y_R", row.rare_classes},
      {"Y_C", row.common_classes},
      {"N_u_com", split.common_unseen.size()},
  };
  auto filtered = nlohmann::json::array();
  for (auto tag : {zsl::SplitTag::existing, zsl::SplitTag::proposed}) {
    const fs::path p = report_path(config, repeat, tag, ".json");
    if (!fs::exists(p)) continue;
    const auto r = read_json(p);
    zsl::EvalReport report;
    report.split = tag;
    for (const auto& c : r.at("per_class")) {
      report.per_class[c.at("class_id").get<ClassId>()] = {c.at("correct").get<std::size_t>(), c.at("total").get<std::size_t>()};
    }
    report.recompute_mean();
    for (auto mode : {zsl::FilterTag::rare, zsl::FilterTag::common}) {
      filtered.push_back(zsl::to_json(rarity::rare_filtered_report(report, designation, data.catalog, mode), data.catalog));
    }
  }
  j["filtered_reports"] = filtered;
  write_json(rarity_path(config, repeat), stamped(config, repeat, j));
  return row;
}

}  // namespace

void rarity_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat) {
  rarity::write_summary_csv(config.out_dir / repeat_name("rarity_summary", repeat, ".csv"),
                            {rarity_for_repeat(config, data, repeat)});
}

void run_pipeline(const PipelineConfig& config) {
  fs::create_directories(config.out_dir);
  fs::create_directories(config.trace_dir);
  const fs::path manifest = config.out_dir / "run.json";
  nlohmann::json status = {{"config_digest", config.digest}, {"rng_seed", config.seed},
                           {"repeats", config.repeats}, {"status", "incomplete"}};
  write_json(manifest, status);

  try {
    const Dataset data = load_dataset(config);
    ingest(config, data);
    std::vector<rarity::SummaryRow> rows;
    std::vector<ClassSet> commons;
    for (std::size_t r = 0; r < config.repeats; ++r) {
      const auto split = split_stage(config, data, r);
      for (std::size_t o = 0; o < commons.size(); ++o) {
        if (commons[o] == split.common_unseen) spdlog::warn("repeats {} and {} share the same U_com", o, r);
      }
      commons.push_back(split.common_unseen);
      seed_stage(config, data, r);
      mine_stage(config, data, r);
      const auto es = eval_stage(config, data, r, zsl::SplitTag::existing);
      const auto ps = eval_stage(config, data, r, zsl::SplitTag::proposed);
      spdlog::info("repeat {}: mean per-class top-1 ES {:.4f}, PS {:.4f}", r, es.mean_per_class_top1, ps.mean_per_class_top1);
      rows.push_back(rarity_for_repeat(config, data, r));
    }
    rarity::write_summary_csv(config.out_dir / "rarity_summary.csv", rows);
  } catch (const std::exception& e) {
    status["error"] = e.what();
    write_json(manifest, status);
    throw;
  }
  status["status"] = "complete";
  write_json(manifest, status);
}

}  // namespace dirac::pipeline
