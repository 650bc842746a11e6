#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "conex/excerpts.hpp"
#include "conex/sobol.hpp"

namespace conex::cli {

struct RunConfig {
  std::string provider;        // builtin model dir, cmd:<command> or tcp:<host>:<port>
  std::string corpus;          // NDJSON documents
  std::string out_dir = "out";
  std::string cache_dir;       // empty disables the embedding cache
  std::size_t class_id = 0;
  GranularitySpec tau1 = GranularitySpec::parse("sentence");
  GranularitySpec tau2 = GranularitySpec::parse("word");
  std::size_t r = 10;
  std::uint64_t seed = 0;

  int nmf_max_iter = 500;
  double nmf_tol = 1e-5;

  std::size_t n_designs = 1024;
  MaskLaw mask_law = MaskLaw::continuous_uniform;
  Sampler sampler = Sampler::qmc_sobol_sequence;

  std::size_t num_random = 10;
  std::size_t subsets = 1;     // > 1 evaluates on disjoint excerpt subsets
  std::size_t subset_size = 0;

  std::string explain_input;   // corpus to explain; empty uses the concept excerpts
  std::size_t explain_max = 20;

  std::string annotations;
  double overlap_frac = 0.0;

  std::string title = "Concept explanations";
  std::size_t examples_per_concept = 5;

  std::filesystem::path model_dir() const { return std::filesystem::path(out_dir) / "model"; }
  nlohmann::ordered_json to_json() const;
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Range checks and the τ pairing rule; path checks are left to each command
// since commands need different inputs.
void validate(const RunConfig& config);

// Per-stage seeds fanned out from the run seed.
nlohmann::ordered_json stage_seeds(std::uint64_t seed);

}  // namespace conex::cli
