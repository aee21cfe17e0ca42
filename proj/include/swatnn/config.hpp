#pragma once

// JSON forms of networks, configurations and results. Readers reject unknown keys
// and keep defaults for absent ones.

#include "swatnn/analysis.hpp"
#include "swatnn/autoenc.hpp"
#include "swatnn/baselines.hpp"
#include "swatnn/bench.hpp"
#include "swatnn/latentopt.hpp"

#include <json.hpp>

#include <string>

namespace swatnn {

using Json = nlohmann::json;

Json mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const Json& j);
void save_mlp(const std::string& path, const Mlp& mlp);
Mlp load_mlp(const std::string& path);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);

Json layout_to_json(const RepLayout& layout);
RepLayout layout_from_json(const Json& j);

Json config_to_json(const AutoencoderConfig& cfg);
AutoencoderConfig autoencoder_config_from_json(const Json& j);

Json sample_options_to_json(const SampleOptions& s);
SampleOptions sample_options_from_json(const Json& j);

Json train_spec_to_json(const TrainSpec& t);
TrainSpec train_spec_from_json(const Json& j);

Json penalty_to_json(const PenaltyConfig& p);
// Accepts an object or one of the level names.
PenaltyConfig penalty_from_json(const Json& j);

Json search_config_to_json(const SearchConfig& c);
SearchConfig search_config_from_json(const Json& j);

Json traditional_config_to_json(const TraditionalConfig& c);
TraditionalConfig traditional_config_from_json(const Json& j);

Json admm_config_to_json(const AdmmConfig& c);
AdmmConfig admm_config_from_json(const Json& j);

Json smoothness_config_to_json(const SmoothnessConfig& c);
SmoothnessConfig smoothness_config_from_json(const Json& j);

Json compress_config_to_json(const CompressConfig& c);
CompressConfig compress_config_from_json(const Json& j);

Json task_spec_to_json(const TaskSpec& s);

// Shared result schema: {"kind", "task", "runs": [...], "selected"}.
Json decoder_result_to_json(const DecoderResult& r);
Json baseline_result_to_json(const BaselineResult& r, const std::string& label);
Json search_result_to_json(const SearchResult& r, const std::string& task);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace swatnn
