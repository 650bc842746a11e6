#include "run_config.hpp"

#include <fstream>

#include "conex/errors.hpp"
#include "conex/rng.hpp"

namespace conex::cli {
namespace {

template <class T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    field = j[key].get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(key)) return empty;
  if (!j[key].is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return j[key];
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  take(j, "provider", c.provider);
  take(j, "corpus", c.corpus);
  take(j, "out_dir", c.out_dir);
  take(j, "cache_dir", c.cache_dir);
  take(j, "class_id", c.class_id);
  take(j, "r", c.r);
  take(j, "seed", c.seed);
  std::string s;
  take(j, "tau1", s);
  if (!s.empty()) c.tau1 = GranularitySpec::parse(s);
  s.clear();
  take(j, "tau2", s);
  if (!s.empty()) c.tau2 = GranularitySpec::parse(s);

  const auto& nmf = section(j, "nmf");
  take(nmf, "max_iter", c.nmf_max_iter);
  take(nmf, "tol", c.nmf_tol);

  const auto& sobol = section(j, "sobol");
  take(sobol, "N", c.n_designs);
  s.clear();
  take(sobol, "mask_law", s);
  if (!s.empty()) c.mask_law = parse_mask_law(s);
  s.clear();
  take(sobol, "sampler", s);
  if (!s.empty()) c.sampler = parse_sampler(s);

  const auto& fid = section(j, "fidelity");
  take(fid, "num_random", c.num_random);
  take(fid, "subsets", c.subsets);
  take(fid, "subset_size", c.subset_size);

  const auto& ex = section(j, "explain");
  take(ex, "input", c.explain_input);
  take(ex, "max_excerpts", c.explain_max);

  const auto& al = section(j, "align");
  take(al, "annotations", c.annotations);
  take(al, "overlap_frac", c.overlap_frac);

  const auto& rep = section(j, "report");
  take(rep, "title", c.title);
  take(rep, "examples_per_concept", c.examples_per_concept);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate(const RunConfig& c) {
  if (c.r == 0) throw ConfigError("r must be at least 1");
  if (c.nmf_max_iter < 1) throw ConfigError("nmf.max_iter must be positive");
  if (!(c.nmf_tol >= 0.0)) throw ConfigError("nmf.tol must be non-negative");
  if (c.n_designs == 0) throw ConfigError("sobol.N must be positive");
  if (c.sampler == Sampler::qmc_sobol_sequence && (c.n_designs & (c.n_designs - 1)) != 0)
    throw ConfigError("sobol.N must be a power of two with the qmc sampler, got " + std::to_string(c.n_designs));
  if (c.subsets == 0) throw ConfigError("fidelity.subsets must be at least 1");
  if (c.subsets > 1 && c.subset_size == 0) throw ConfigError("fidelity.subset_size is required when subsets > 1");
  if (!(c.overlap_frac >= 0.0 && c.overlap_frac <= 1.0)) throw ConfigError("align.overlap_frac must be in [0, 1]");
  if (c.out_dir.empty()) throw ConfigError("out_dir must not be empty");
  c.tau1.validate();
  c.tau2.validate();
  check_compatible(c.tau1, c.tau2);
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["provider"] = provider;
  j["corpus"] = corpus;
  j["out_dir"] = out_dir;
  j["cache_dir"] = cache_dir;
  j["class_id"] = class_id;
  j["tau1"] = tau1.str();
  j["tau2"] = tau2.str();
  j["r"] = r;
  j["seed"] = seed;
  j["nmf"] = {{"max_iter", nmf_max_iter}, {"tol", nmf_tol}};
  j["sobol"] = {{"N", n_designs}, {"mask_law", to_string(mask_law)}, {"sampler", to_string(sampler)}};
  j["fidelity"] = {{"num_random", num_random}, {"subsets", subsets}, {"subset_size", subset_size}};
  j["explain"] = {{"input", explain_input}, {"max_excerpts", explain_max}};
  j["align"] = {{"annotations", annotations}, {"overlap_frac", overlap_frac}};
  j["report"] = {{"title", title}, {"examples_per_concept", examples_per_concept}};
  return j;
}

nlohmann::ordered_json stage_seeds(std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["derivation"] = "splitmix64(seed ^ fnv1a64(stage))";
  for (const char* stage : {"nmf", "sobol", "fidelity", "subsets"}) j[stage] = derive_seed(seed, stage);
  return j;
}

}  // namespace conex::cli
