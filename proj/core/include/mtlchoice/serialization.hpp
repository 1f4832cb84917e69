#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "mtlchoice/mnl.hpp"
#include "mtlchoice/mtldnn.hpp"
#include "mtlchoice/nl.hpp"
#include "mtlchoice/search.hpp"
#include "mtlchoice/synth.hpp"

namespace mtlchoice {

using Json = nlohmann::json;

/// Seven estimators compared side by side.
enum class ModelKind { Mtldnn, DnnSpt, DnnJoint, NlC, NlNc, MnlSpt, MnlJoint };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

std::string hex64(std::uint64_t value);
std::uint64_t parse_hex64(const std::string& text);

/// Matrices are stored as {"rows", "cols", "data"} with data column-major.
Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const Json& j);
Json to_json(const Scaler& scaler);
Scaler scaler_from_json(const Json& j, const FeatureSchema& schema);

Json to_json(const DgpSpec& spec);
DgpSpec dgp_from_json(const Json& j);

/// Missing fields keep their defaults; unknown fields are rejected.
Json to_json(const HyperConfig& hyper);
HyperConfig hyper_from_json(const Json& j, HyperConfig base = {});
Json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const Json& j, SearchSpace base = {});

Json to_json(const MnlModel& model);
MnlModel mnl_from_json(const Json& j);
Json to_json(const MnlSptModel& model);
MnlSptModel mnl_spt_from_json(const Json& j);
Json to_json(const NlModel& model);
NlModel nl_from_json(const Json& j);
Json to_json(const MtldnnModel& model);
MtldnnModel mtldnn_from_json(const Json& j);

/// Self-contained fitted model: estimator, schema, the scaler that maps raw
/// rows to model inputs, and the provenance of the run.
struct ModelFile {
  ModelKind kind = ModelKind::Mtldnn;
  FeatureSchema schema;
  Scaler scaler;
  std::shared_ptr<const ChoiceModel> model;
  std::string config_hash;
  std::uint64_t seed = 0;
};

Json to_json(const ModelFile& file);
/// Rejects a schema_hash that does not match the embedded schema.
ModelFile model_file_from_json(const Json& j);

void save_json(const std::filesystem::path& path, const Json& j);
Json load_json(const std::filesystem::path& path);

}  // namespace mtlchoice
