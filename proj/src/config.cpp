#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "dirac/error.hpp"
#include "dirac/pipeline.hpp"
#include "text_util.hpp"

namespace dirac::pipeline {

const ConfigMap& default_config() {
  static const ConfigMap defaults = {
      {"attributes", ""},
      {"features", ""},
      {"catalog", ""},
      {"attribute_scale", "1"},
      {"synthetic", "0"},
      {"synthetic_classes", "40"},
      {"synthetic_attrs", "20"},
      {"synthetic_dim", "16"},
      {"synthetic_clusters", "5"},
      {"synthetic_rare", "3"},
      {"synthetic_images", "30"},
      {"synthetic_seed", "7"},
      {"synthetic_unseen_fraction", "0.25"},
      {"n_s", ""},
      {"seed", "0"},
      {"repeats", "3"},
      {"cluster_lower_bound", "5"},
      {"q", "2"},
      {"t", "0"},
      {"lr", "0.01"},
      {"epochs", "30"},
      {"batch_size", "32"},
      {"momentum", "0.9"},
      {"distance_blend", "0.5"},
      {"eszsl_gamma", "1"},
      {"eszsl_lambda", "1"},
      {"rare_threshold", "0.05"},
      {"common_threshold", "0.5"},
      {"predictions_es", ""},
      {"predictions_ps", ""},
      {"out_dir", "out"},
      {"trace_dir", ""},
  };
  return defaults;
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::config, "cli", what); }

void check_known(const std::string& key) {
  if (!default_config().contains(key)) config_error("unknown configuration key '" + key + "'");
}

template <typename T>
T number(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    config_error("'" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

bool flag(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no" || s.empty()) return false;
  config_error("'" + key + "' expects 0 or 1, got '" + s + "'");
}

std::string sha256_hex(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::numerical, "cli", "sha256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

}  // namespace

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file " + path.string());
  ConfigMap out;
  std::string line;
  while (std::getline(in, line)) {
    auto kv = detail::parse_key_value(line);
    if (!kv) continue;
    check_known(kv->first);
    out[kv->first] = kv->second;
  }
  return out;
}

ConfigMap environment_overrides() {
  ConfigMap out;
  for (const auto& [key, _] : default_config()) {
    std::string name = "DIRAC_" + key;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
    if (const char* v = std::getenv(name.c_str())) out[key] = v;
  }
  return out;
}

ConfigMap merge(std::initializer_list<const ConfigMap*> layers) {
  ConfigMap out;
  for (const ConfigMap* layer : layers) {
    for (const auto& [k, v] : *layer) {
      check_known(k);
      out[k] = v;
    }
  }
  return out;
}

PipelineConfig parse_config(const ConfigMap& given) {
  ConfigMap m = default_config();
  for (const auto& [k, v] : given) {
    check_known(k);
    m[k] = v;
  }

  PipelineConfig c;
  c.attributes = m["attributes"];
  c.features = m["features"];
  c.catalog = m["catalog"];
  c.attribute_scale = number<double>(m, "attribute_scale");
  c.synthetic = flag(m, "synthetic");
  c.synthetic_params.n_classes = number<std::size_t>(m, "synthetic_classes");
  c.synthetic_params.d_attrs = number<std::size_t>(m, "synthetic_attrs");
  c.synthetic_params.k_dim = number<std::size_t>(m, "synthetic_dim");
  c.synthetic_params.n_clusters = number<std::size_t>(m, "synthetic_clusters");
  c.synthetic_params.rare_attr_count = number<std::size_t>(m, "synthetic_rare");
  c.synthetic_params.images_per_class = number<std::size_t>(m, "synthetic_images");
  c.synthetic_params.rng_seed = number<std::uint64_t>(m, "synthetic_seed");
  c.synthetic_params.unseen_fraction = number<double>(m, "synthetic_unseen_fraction");
  if (m["n_s"].empty()) config_error("'n_s' (number of seen classes to select) is required");
  c.n_s = number<std::size_t>(m, "n_s");
  c.seed = number<std::uint64_t>(m, "seed");
  c.repeats = number<std::size_t>(m, "repeats");
  c.cluster_lower_bound = number<std::size_t>(m, "cluster_lower_bound");
  c.q = number<std::size_t>(m, "q");
  c.t = number<std::size_t>(m, "t");
  c.lr = number<double>(m, "lr");
  c.epochs = number<std::size_t>(m, "epochs");
  c.batch_size = number<std::size_t>(m, "batch_size");
  c.momentum = number<double>(m, "momentum");
  c.distance_blend = number<double>(m, "distance_blend");
  c.eszsl.gamma = number<double>(m, "eszsl_gamma");
  c.eszsl.lambda = number<double>(m, "eszsl_lambda");
  c.rare_threshold = number<double>(m, "rare_threshold");
  c.common_threshold = number<double>(m, "common_threshold");
  c.predictions_es = m["predictions_es"];
  c.predictions_ps = m["predictions_ps"];
  c.out_dir = m["out_dir"];
  c.trace_dir = m["trace_dir"].empty() ? c.out_dir : std::filesystem::path(m["trace_dir"]);

  if (!c.synthetic && (c.attributes.empty() || c.features.empty())) {
    config_error("'attributes' and 'features' are required unless synthetic = 1");
  }
  if (c.n_s == 0) config_error("'n_s' must be positive");
  if (c.repeats < 1) config_error("'repeats' must be at least 1");
  if (c.q < 1) config_error("'q' must be at least 1");
  if (!(c.lr > 0.0)) config_error("'lr' must be positive");
  if (c.batch_size < 1) config_error("'batch_size' must be at least 1");
  if (c.distance_blend < 0.0 || c.distance_blend > 1.0) config_error("'distance_blend' must lie in [0, 1]");
  if (!(c.eszsl.gamma > 0.0) || !(c.eszsl.lambda > 0.0)) config_error("ESZSL gamma and lambda must be positive");
  if (!(c.attribute_scale > 0.0)) config_error("'attribute_scale' must be positive");
  if (!(c.rare_threshold > 0.0 && c.rare_threshold <= 1.0) || !(c.common_threshold > 0.0 && c.common_threshold <= 1.0)) {
    config_error("rarity thresholds must lie in (0, 1]");
  }

  std::string canonical;
  for (const auto& [k, v] : m) {
    if (k == "out_dir" || k == "trace_dir") continue;
    canonical += k + " = " + v + "\n";
  }
  c.digest = sha256_hex(canonical);
  return c;
}

}  // namespace dirac::pipeline
