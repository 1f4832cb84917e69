#include "mtlchoice/serialization.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "mtlchoice/error.hpp"

namespace mtlchoice {

namespace {

constexpr int kFormatVersion = 1;

template <typename T>
void read_field(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T require(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return it->template get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

Json layers_to_json(const LayerStack& stack) {
  Json out = Json::array();
  for (const auto& layer : stack) {
    out.push_back({{"activation", layer.activation == Activation::ReLU ? "relu" : "linear"},
                   {"weights", to_json(layer.weights)},
                   {"bias", to_json(layer.bias)}});
  }
  return out;
}

LayerStack layers_from_json(const Json& j) {
  LayerStack stack;
  for (const auto& item : j) {
    DenseLayer layer;
    const auto act = require<std::string>(item, "activation", "layer");
    if (act == "relu") {
      layer.activation = Activation::ReLU;
    } else if (act == "linear") {
      layer.activation = Activation::Linear;
    } else {
      throw ConfigError("layer: unknown activation '" + act + "'");
    }
    layer.weights = matrix_from_json(item.at("weights"));
    layer.bias = vector_from_json(item.at("bias"));
    if (layer.bias.size() != layer.weights.rows()) throw ShapeError("layer bias size mismatch");
    stack.push_back(std::move(layer));
  }
  return stack;
}

Json status_to_json(const FitStatus& s) {
  return {{"converged", s.converged},
          {"iterations", s.iterations},
          {"gradient_max_norm", s.gradient_max_norm},
          {"log_likelihood", s.log_likelihood},
          {"warnings", s.warnings}};
}

FitStatus status_from_json(const Json& j) {
  FitStatus s;
  read_field(j, "converged", s.converged, "status");
  read_field(j, "iterations", s.iterations, "status");
  read_field(j, "gradient_max_norm", s.gradient_max_norm, "status");
  read_field(j, "log_likelihood", s.log_likelihood, "status");
  read_field(j, "warnings", s.warnings, "status");
  return s;
}

Scope parse_scope(const std::string& s) {
  if (s == "rp") return Scope::RP;
  if (s == "sp") return Scope::SP;
  if (s == "joint") return Scope::Joint;
  throw ConfigError("unknown scope '" + s + "'");
}

FeatureMap feature_map_from(const std::string& s) {
  auto m = parse_feature_map(s);
  if (!m) throw ConfigError("unknown feature map '" + s + "'");
  return *m;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Mtldnn: return "mtldnn";
    case ModelKind::DnnSpt: return "dnn-spt";
    case ModelKind::DnnJoint: return "dnn-joint";
    case ModelKind::NlC: return "nl-c";
    case ModelKind::NlNc: return "nl-nc";
    case ModelKind::MnlSpt: return "mnl-spt";
    case ModelKind::MnlJoint: return "mnl-joint";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (ModelKind k : {ModelKind::Mtldnn, ModelKind::DnnSpt, ModelKind::DnnJoint, ModelKind::NlC,
                      ModelKind::NlNc, ModelKind::MnlSpt, ModelKind::MnlJoint}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof buf, value, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::uint64_t parse_hex64(const std::string& text) {
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("bad hex value '" + text + "'");
  }
  return v;
}

Json to_json(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = require<Index>(j, "rows", "matrix");
  const auto cols = require<Index>(j, "cols", "matrix");
  const auto data = require<std::vector<double>>(j, "data", "matrix");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw ShapeError("matrix data does not match its shape");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

Json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const Json& j) {
  const auto data = j.get<std::vector<double>>();
  Vector v(static_cast<Index>(data.size()));
  std::copy(data.begin(), data.end(), v.data());
  return v;
}

Json to_json(const FeatureSchema& schema) {
  return {{"features", schema.names()},
          {"sp_only_features", schema.av_specific()},
          {"rp_alternatives", schema.rp_alternatives()},
          {"sp_alternatives", schema.sp_alternatives()}};
}

FeatureSchema schema_from_json(const Json& j) {
  reject_unknown(j, {"features", "sp_only_features", "rp_alternatives", "sp_alternatives"},
                 "schema");
  std::vector<std::string> sp_only;
  read_field(j, "sp_only_features", sp_only, "schema");
  return FeatureSchema(require<std::vector<std::string>>(j, "features", "schema"), sp_only,
                       require<std::vector<std::string>>(j, "rp_alternatives", "schema"),
                       require<std::vector<std::string>>(j, "sp_alternatives", "schema"));
}

Json to_json(const Scaler& scaler) {
  return {{"mean", to_json(scaler.mean())},
          {"sd", to_json(scaler.sd())},
          {"scaled", scaler.scaled()}};
}

Scaler scaler_from_json(const Json& j, const FeatureSchema& schema) {
  return Scaler(schema, vector_from_json(j.at("mean")), vector_from_json(j.at("sd")),
                j.at("scaled").get<std::vector<bool>>());
}

Json to_json(const DgpSpec& spec) {
  Json shared = Json::array();
  for (auto [a, c] : spec.shared_map) shared.push_back({a, c});
  Json j{{"kind", std::string(to_string(spec.kind))},
         {"schema", to_json(spec.schema)},
         {"beta_rp", to_json(spec.beta_rp)},
         {"beta_sp", to_json(spec.beta_sp)},
         {"theta", spec.theta},
         {"shared_map", shared},
         {"location", to_json(spec.location)},
         {"spread", to_json(spec.spread)},
         {"noise_seed", spec.noise_seed}};
  if (spec.kind == DgpKind::Nonlinear) {
    j["nonlinear_rp"] = to_json(spec.nonlinear_rp);
    j["nonlinear_sp"] = to_json(spec.nonlinear_sp);
  }
  return j;
}

DgpSpec dgp_from_json(const Json& j) {
  reject_unknown(j,
                 {"kind", "schema", "beta_rp", "beta_sp", "theta", "shared_map", "location",
                  "spread", "noise_seed", "nonlinear_rp", "nonlinear_sp"},
                 "dgp");
  DgpSpec spec;
  const auto kind = parse_dgp_kind(require<std::string>(j, "kind", "dgp"));
  if (!kind) throw ConfigError("dgp.kind: unknown kind");
  spec.kind = *kind;
  spec.schema = schema_from_json(j.at("schema"));
  spec.beta_rp = matrix_from_json(j.at("beta_rp"));
  spec.beta_sp = matrix_from_json(j.at("beta_sp"));
  read_field(j, "theta", spec.theta, "dgp");
  if (j.contains("shared_map")) {
    for (const auto& pair : j.at("shared_map")) {
      spec.shared_map.emplace_back(pair.at(0).get<Index>(), pair.at(1).get<Index>());
    }
  }
  const Index d = spec.schema.dim();
  spec.location = j.contains("location") ? vector_from_json(j.at("location")) : Vector::Zero(d);
  spec.spread = j.contains("spread") ? vector_from_json(j.at("spread")) : Vector::Ones(d);
  read_field(j, "noise_seed", spec.noise_seed, "dgp");
  if (j.contains("nonlinear_rp")) spec.nonlinear_rp = matrix_from_json(j.at("nonlinear_rp"));
  if (j.contains("nonlinear_sp")) spec.nonlinear_sp = matrix_from_json(j.at("nonlinear_sp"));
  spec.validate();
  return spec;
}

Json to_json(const HyperConfig& h) {
  return {{"shared_depth", h.shared_depth}, {"task_depth", h.task_depth},
          {"width", h.width},               {"lambda0", h.lambda0},
          {"lambda1", h.lambda1},           {"lambda2", h.lambda2},
          {"lambda3", h.lambda3},           {"n_iter", h.n_iter},
          {"batch", h.batch},               {"learning_rate", h.learning_rate},
          {"seed", h.seed},                 {"mask_rp", h.mask_rp}};
}

HyperConfig hyper_from_json(const Json& j, HyperConfig h) {
  const std::string w = "hyper";
  reject_unknown(j,
                 {"shared_depth", "task_depth", "width", "lambda0", "lambda1", "lambda2",
                  "lambda3", "n_iter", "batch", "learning_rate", "seed", "mask_rp"},
                 w);
  read_field(j, "shared_depth", h.shared_depth, w);
  read_field(j, "task_depth", h.task_depth, w);
  read_field(j, "width", h.width, w);
  read_field(j, "lambda0", h.lambda0, w);
  read_field(j, "lambda1", h.lambda1, w);
  read_field(j, "lambda2", h.lambda2, w);
  read_field(j, "lambda3", h.lambda3, w);
  read_field(j, "n_iter", h.n_iter, w);
  read_field(j, "batch", h.batch, w);
  read_field(j, "learning_rate", h.learning_rate, w);
  read_field(j, "seed", h.seed, w);
  read_field(j, "mask_rp", h.mask_rp, w);
  return h;
}

Json to_json(const SearchSpace& s) {
  return {{"shared_depth", s.shared_depth}, {"task_depth", s.task_depth}, {"width", s.width},
          {"lambda1", s.lambda1},           {"lambda2", s.lambda2},       {"lambda3", s.lambda3},
          {"n_iter", s.n_iter},             {"batch", s.batch},           {"learning_rate", s.learning_rate}};
}

SearchSpace search_space_from_json(const Json& j, SearchSpace s) {
  const std::string w = "search_space";
  reject_unknown(j,
                 {"shared_depth", "task_depth", "width", "lambda1", "lambda2", "lambda3",
                  "n_iter", "batch", "learning_rate"},
                 w);
  read_field(j, "shared_depth", s.shared_depth, w);
  read_field(j, "task_depth", s.task_depth, w);
  read_field(j, "width", s.width, w);
  read_field(j, "lambda1", s.lambda1, w);
  read_field(j, "lambda2", s.lambda2, w);
  read_field(j, "lambda3", s.lambda3, w);
  read_field(j, "n_iter", s.n_iter, w);
  read_field(j, "batch", s.batch, w);
  read_field(j, "learning_rate", s.learning_rate, w);
  return s;
}

Json to_json(const MnlModel& m) {
  return {{"beta", to_json(m.beta)},
          {"scope", std::string(to_string(m.scope))},
          {"feature_map", std::string(to_string(m.feature_map))},
          {"mask_rp", m.mask_rp},
          {"num_rp_alternatives", m.num_rp_alternatives},
          {"status", status_to_json(m.status)}};
}

MnlModel mnl_from_json(const Json& j) {
  MnlModel m;
  m.beta = matrix_from_json(j.at("beta"));
  m.scope = parse_scope(require<std::string>(j, "scope", "mnl"));
  m.feature_map = feature_map_from(require<std::string>(j, "feature_map", "mnl"));
  m.mask_rp = require<bool>(j, "mask_rp", "mnl");
  m.num_rp_alternatives = require<Index>(j, "num_rp_alternatives", "mnl");
  if (j.contains("status")) m.status = status_from_json(j.at("status"));
  return m;
}

Json to_json(const MnlSptModel& m) { return {{"rp", to_json(m.rp)}, {"sp", to_json(m.sp)}}; }

MnlSptModel mnl_spt_from_json(const Json& j) {
  MnlSptModel m;
  m.rp = mnl_from_json(j.at("rp"));
  m.sp = mnl_from_json(j.at("sp"));
  return m;
}

Json to_json(const NlModel& m) {
  Json ties = Json::array();
  for (auto [a, c] : m.ties) ties.push_back({a, c});
  return {{"beta_rp", to_json(m.beta_rp)},
          {"beta_sp", to_json(m.beta_sp)},
          {"log_theta", m.log_theta},
          {"ties", ties},
          {"feature_map", std::string(to_string(m.feature_map))},
          {"theta_identified", m.theta_identified},
          {"status", status_to_json(m.status)}};
}

NlModel nl_from_json(const Json& j) {
  NlModel m;
  m.beta_rp = matrix_from_json(j.at("beta_rp"));
  m.beta_sp = matrix_from_json(j.at("beta_sp"));
  m.log_theta = require<double>(j, "log_theta", "nl");
  for (const auto& pair : j.at("ties")) {
    m.ties.emplace_back(pair.at(0).get<Index>(), pair.at(1).get<Index>());
  }
  m.feature_map = feature_map_from(require<std::string>(j, "feature_map", "nl"));
  m.theta_identified = require<bool>(j, "theta_identified", "nl");
  if (j.contains("status")) m.status = status_from_json(j.at("status"));
  return m;
}

Json to_json(const MtldnnModel& m) {
  return {{"hyper", to_json(m.hyper)},
          {"input_dim", m.input_dim},
          {"num_rp", m.num_rp},
          {"num_sp", m.num_sp},
          {"sp_only_inputs", m.sp_only_inputs},
          {"shared", layers_to_json(m.params.shared)},
          {"rp_head", layers_to_json(m.params.rp_head)},
          {"sp_head", layers_to_json(m.params.sp_head)},
          {"log_temperature", m.params.log_temperature}};
}

MtldnnModel mtldnn_from_json(const Json& j) {
  MtldnnModel m;
  m.hyper = hyper_from_json(j.at("hyper"));
  m.hyper.validate();
  m.input_dim = require<Index>(j, "input_dim", "mtldnn");
  m.num_rp = require<Index>(j, "num_rp", "mtldnn");
  m.num_sp = require<Index>(j, "num_sp", "mtldnn");
  m.sp_only_inputs = require<std::vector<Index>>(j, "sp_only_inputs", "mtldnn");
  m.params.shared = layers_from_json(j.at("shared"));
  m.params.rp_head = layers_from_json(j.at("rp_head"));
  m.params.sp_head = layers_from_json(j.at("sp_head"));
  m.params.log_temperature = require<double>(j, "log_temperature", "mtldnn");
  check_stack(m.params.shared, m.input_dim);
  if (!m.params.is_joint()) {
    const Index head_in = m.params.shared.empty() ? m.input_dim : m.params.shared.back().out_dim();
    check_stack(m.params.rp_head, head_in);
    check_stack(m.params.sp_head, head_in);
  }
  return m;
}

Json to_json(const ModelFile& file) {
  Json body;
  switch (file.kind) {
    case ModelKind::Mtldnn:
    case ModelKind::DnnSpt:
    case ModelKind::DnnJoint:
      body = to_json(dynamic_cast<const MtldnnModel&>(*file.model));
      break;
    case ModelKind::NlC:
    case ModelKind::NlNc:
      body = to_json(dynamic_cast<const NlModel&>(*file.model));
      break;
    case ModelKind::MnlSpt:
      body = to_json(dynamic_cast<const MnlSptModel&>(*file.model));
      break;
    case ModelKind::MnlJoint:
      body = to_json(dynamic_cast<const MnlModel&>(*file.model));
      break;
  }
  return {{"format_version", kFormatVersion},
          {"kind", std::string(to_string(file.kind))},
          {"schema", to_json(file.schema)},
          {"schema_hash", hex64(file.schema.hash())},
          {"scaler", to_json(file.scaler)},
          {"config_hash", file.config_hash},
          {"seed", file.seed},
          {"model", body}};
}

ModelFile model_file_from_json(const Json& j) {
  reject_unknown(j,
                 {"format_version", "kind", "schema", "schema_hash", "scaler", "config_hash",
                  "seed", "model"},
                 "model file");
  if (require<int>(j, "format_version", "model file") != kFormatVersion) {
    throw ConfigError("model file: unsupported format_version");
  }
  ModelFile file;
  file.kind = parse_model_kind(require<std::string>(j, "kind", "model file"));
  file.schema = schema_from_json(j.at("schema"));
  if (require<std::string>(j, "schema_hash", "model file") != hex64(file.schema.hash())) {
    throw ConfigError("model file: schema_hash does not match the schema");
  }
  file.scaler = scaler_from_json(j.at("scaler"), file.schema);
  file.config_hash = require<std::string>(j, "config_hash", "model file");
  file.seed = require<std::uint64_t>(j, "seed", "model file");
  const Json& body = j.at("model");
  switch (file.kind) {
    case ModelKind::Mtldnn:
    case ModelKind::DnnSpt:
    case ModelKind::DnnJoint:
      file.model = std::make_shared<const MtldnnModel>(mtldnn_from_json(body));
      break;
    case ModelKind::NlC:
    case ModelKind::NlNc:
      file.model = std::make_shared<const NlModel>(nl_from_json(body));
      break;
    case ModelKind::MnlSpt:
      file.model = std::make_shared<const MnlSptModel>(mnl_spt_from_json(body));
      break;
    case ModelKind::MnlJoint:
      file.model = std::make_shared<const MnlModel>(mnl_from_json(body));
      break;
  }
  return file;
}

void save_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace mtlchoice
