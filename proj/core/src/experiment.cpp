#include "mtlchoice/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "mtlchoice/error.hpp"

namespace mtlchoice {

namespace fs = std::filesystem;

namespace {

enum SeedStream : std::uint64_t { kSplit = 101, kHyper = 102, kSearch = 103 };

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void check_keys(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

template <typename T>
void get_to(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

Task task_field(const Json& j, const std::string& where, Task fallback) {
  if (!j.contains("task")) return fallback;
  std::optional<Task> task;
  try {
    task = parse_task(j.at("task").get<std::string>());
  } catch (const Json::exception&) {
    throw ConfigError(where + ".task: wrong type");
  }
  if (!task) throw ConfigError(where + ".task: expected rp or sp");
  return *task;
}

FeatureSchema schema_preset(const std::string& name) {
  if (name == "mode_choice") return mode_choice_schema();
  if (name == "two_feature") return two_feature_linear_dgp().schema;
  throw ConfigError("data.csv.schema_preset: unknown preset '" + name + "'");
}

SynthSource parse_synth(const Json& j) {
  const std::string w = "data.synth";
  check_keys(j, {"preset", "theta", "spec", "n_rp", "n_sp"}, w);
  SynthSource s;
  get_to(j, "preset", s.preset, w);
  get_to(j, "theta", s.theta, w);
  get_to(j, "n_rp", s.n_rp, w);
  get_to(j, "n_sp", s.n_sp, w);
  if (j.contains("spec")) s.spec = dgp_from_json(j.at("spec"));
  if (s.preset.empty() == !s.spec.has_value()) {
    throw ConfigError(w + ": give exactly one of 'preset' and 'spec'");
  }
  if (s.n_rp < 0 || s.n_sp < 0 || s.n_rp + s.n_sp == 0) {
    throw ConfigError(w + ": n_rp and n_sp must be non-negative and not both zero");
  }
  if (!(s.theta > 0.0)) throw ConfigError(w + ".theta: must be positive");
  s.resolve();
  return s;
}

CsvSource parse_csv(const Json& j, const fs::path& base) {
  const std::string w = "data.csv";
  check_keys(j, {"path", "schema", "schema_preset"}, w);
  CsvSource c;
  std::string path;
  get_to(j, "path", path, w);
  if (path.empty()) throw ConfigError(w + ".path: required");
  c.path = fs::path(path).is_absolute() ? fs::path(path) : base / path;
  if (j.contains("schema") == j.contains("schema_preset")) {
    throw ConfigError(w + ": give exactly one of 'schema' and 'schema_preset'");
  }
  if (j.contains("schema")) {
    c.schema = schema_from_json(j.at("schema"));
  } else {
    c.schema = schema_preset(j.at("schema_preset").get<std::string>());
  }
  return c;
}

std::vector<double> parse_grid(const Json& j, const std::string& w) {
  if (j.is_array()) return j.get<std::vector<double>>();
  check_keys(j, {"from", "to", "steps"}, w);
  double from = 0, to = 0;
  int steps = 0;
  get_to(j, "from", from, w);
  get_to(j, "to", to, w);
  get_to(j, "steps", steps, w);
  if (steps < 2) throw ConfigError(w + ".steps: must be at least 2");
  std::vector<double> grid;
  for (int i = 0; i < steps; ++i) grid.push_back(from + (to - from) * i / (steps - 1));
  return grid;
}

InterpretSettings parse_interpret(const Json& j) {
  const std::string w = "interpret";
  check_keys(j, {"curves", "elasticities", "rows"}, w);
  InterpretSettings s;
  get_to(j, "rows", s.rows, w);
  if (s.rows != "all" && s.rows != "train" && s.rows != "test") {
    throw ConfigError(w + ".rows: expected all, train or test");
  }
  if (j.contains("curves")) {
    std::size_t i = 0;
    for (const auto& c : j.at("curves")) {
      const std::string cw = w + ".curves[" + std::to_string(i++) + "]";
      check_keys(c, {"variable", "grid", "task", "alternatives"}, cw);
      CurveSpec spec;
      get_to(c, "variable", spec.variable, cw);
      if (!c.contains("grid")) throw ConfigError(cw + ".grid: required");
      spec.grid = parse_grid(c.at("grid"), cw + ".grid");
      spec.task = task_field(c, cw, Task::SP);
      get_to(c, "alternatives", spec.alternatives, cw);
      s.curves.push_back(std::move(spec));
    }
  }
  if (j.contains("elasticities")) {
    std::size_t i = 0;
    for (const auto& e : j.at("elasticities")) {
      const std::string ew = w + ".elasticities[" + std::to_string(i++) + "]";
      check_keys(e, {"variable", "alternative", "task"}, ew);
      ElasticitySpec spec;
      get_to(e, "variable", spec.variable, ew);
      get_to(e, "alternative", spec.alternative, ew);
      spec.task = task_field(e, ew, Task::SP);
      s.elasticities.push_back(std::move(spec));
    }
  }
  return s;
}

SearchSettings parse_search(const Json& j) {
  const std::string w = "search";
  check_keys(j, {"space", "draws", "selection", "workers", "top_k", "validation_ratio"}, w);
  SearchSettings s;
  if (j.contains("space")) {
    const Json& sp = j.at("space");
    if (sp.is_string()) {
      const auto name = sp.get<std::string>();
      if (name == "desk") {
        s.space = SearchSpace::desk();
      } else if (name == "standard") {
        s.space = SearchSpace::standard();
      } else {
        throw ConfigError(w + ".space: unknown preset '" + name + "'");
      }
    } else {
      Json body = sp;
      SearchSpace base = SearchSpace::desk();
      if (body.contains("preset")) {
        base = body.at("preset") == "standard" ? SearchSpace::standard() : SearchSpace::desk();
        body.erase("preset");
      }
      s.space = search_space_from_json(body, base);
    }
  }
  get_to(j, "draws", s.draws, w);
  get_to(j, "workers", s.workers, w);
  get_to(j, "top_k", s.top_k, w);
  get_to(j, "validation_ratio", s.validation_ratio, w);
  if (j.contains("selection")) s.selection = parse_selection(j.at("selection").get<std::string>());
  if (s.draws < 1) throw ConfigError(w + ".draws: must be at least 1");
  if (s.workers < 1) throw ConfigError(w + ".workers: must be at least 1");
  if (s.top_k < 1) throw ConfigError(w + ".top_k: must be at least 1");
  if (s.validation_ratio < 0.0 || s.validation_ratio >= 1.0) {
    throw ConfigError(w + ".validation_ratio: must lie in [0, 1)");
  }
  s.space.validate();
  return s;
}

std::vector<std::string> provenance(const ExperimentConfig& c) {
  return {"config_hash=" + c.hash, "seed=" + std::to_string(c.seed)};
}

Json metrics_json(const TaskMetrics& m) {
  return {{"joint_accuracy", m.joint_accuracy}, {"rp_accuracy", m.rp_accuracy},
          {"sp_accuracy", m.sp_accuracy},       {"risk", m.risk},
          {"rp_rows", m.rp_rows},               {"sp_rows", m.sp_rows}};
}

std::string metrics_text(const std::string& title, const Metrics& m) {
  std::ostringstream s;
  s << title << '\n' << std::fixed << std::setprecision(4);
  s << "             joint      RP      SP    risk\n";
  for (const auto& [name, t] : {std::pair{"train", &m.train}, std::pair{"test ", &m.test}}) {
    s << "  " << name << "    " << std::setw(7) << t->joint_accuracy << ' ' << std::setw(7)
      << t->rp_accuracy << ' ' << std::setw(7) << t->sp_accuracy << ' ' << std::setw(7) << t->risk
      << '\n';
  }
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (!options.out.empty()) return options.out;
  if (!config.output_dir.empty()) return config.output_dir;
  return default_output_dir();
}

void require_ties_rule(const ExperimentConfig& config, ModelKind kind) {
  if (kind == ModelKind::NlC && config.ties.empty()) {
    throw ConfigError("ties: model nl-c needs at least one tie");
  }
  if (kind != ModelKind::NlC && !config.ties.empty()) {
    throw ConfigError("ties: only valid for model nl-c");
  }
}

bool is_network(ModelKind kind) {
  return kind == ModelKind::Mtldnn || kind == ModelKind::DnnSpt || kind == ModelKind::DnnJoint;
}

HyperConfig hyper_for(ModelKind kind, const HyperConfig& hyper) {
  if (kind == ModelKind::DnnSpt) return as_dnn_spt(hyper);
  if (kind == ModelKind::DnnJoint) return as_dnn_joint(hyper);
  HyperConfig h = hyper;
  h.mask_rp = false;
  return h;
}

struct Selected {
  Dataset fit;
  Dataset select;
  std::optional<Dataset> holdout;
};

Selected selection_sets(const ExperimentConfig& config, const PreparedData& data) {
  if (config.search.validation_ratio <= 0.0) {
    return {data.standardized.train, data.standardized.test, std::nullopt};
  }
  const auto inner = split(data.raw_train, 1.0 - config.search.validation_ratio,
                           derive_seed(config.split_seed(), 1));
  const Standardized s = standardize(inner.train, inner.test);
  return {s.train, s.test, s.scaler.transform(data.raw_test)};
}

SearchResult run_search(const ExperimentConfig& config, const Selected& sets) {
  SearchOptions opts;
  opts.draws = config.search.draws;
  opts.selection = config.search.selection;
  opts.seed = config.search_seed();
  opts.workers = config.search.workers;
  return random_search(config.search.space, sets.fit, sets.select, opts,
                       sets.holdout ? &*sets.holdout : nullptr);
}

std::vector<fs::path> report_models(const fs::path& report, std::size_t k) {
  std::ifstream in(report);
  if (!in) throw InputError("cannot open search report " + report.string());
  std::string line;
  std::vector<std::string> header;
  std::map<long, std::string> by_rank;
  auto split_line = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_line(line);
    if (header.empty()) {
      header = cells;
      continue;
    }
    const auto col = [&](const std::string& name) -> std::string {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw InputError("search report lacks column '" + name + "'");
      const auto i = static_cast<std::size_t>(it - header.begin());
      return i < cells.size() ? cells[i] : std::string();
    };
    const std::string rank = col("rank");
    const std::string path = col("model_path");
    if (rank.empty() || path.empty()) continue;
    by_rank[std::stol(rank)] = path;
  }
  if (k == 0) throw InputError("ensemble size must be at least 1");
  if (by_rank.size() < k) {
    throw InputError("search report lists " + std::to_string(by_rank.size()) +
                     " ranked models, fewer than k=" + std::to_string(k));
  }
  std::vector<fs::path> out;
  for (const auto& [rank, path] : by_rank) {
    if (out.size() == k) break;
    out.push_back(report.parent_path() / path);
  }
  return out;
}

std::vector<ModelFile> load_models(const std::vector<fs::path>& paths) {
  std::vector<ModelFile> files;
  for (const auto& p : paths) files.push_back(model_file_from_json(load_json(p)));
  if (files.empty()) throw InputError("no model files given");
  for (const auto& f : files) {
    if (!(f.schema == files.front().schema)) throw InputError("model files disagree on the schema");
  }
  return files;
}

const Dataset& interpret_rows(const PreparedData& data, const std::string& rows) {
  if (rows == "train") return data.raw_train;
  if (rows == "test") return data.raw_test;
  return data.raw;
}

}  // namespace

DgpSpec SynthSource::resolve() const {
  if (spec) return *spec;
  if (preset == "two_feature") return two_feature_linear_dgp();
  const auto kind = parse_dgp_kind(preset);
  if (!kind) throw ConfigError("data.synth.preset: unknown preset '" + preset + "'");
  return mode_choice_dgp(*kind, theta);
}

std::uint64_t ExperimentConfig::split_seed() const { return derive_seed(seed, kSplit); }
std::uint64_t ExperimentConfig::search_seed() const { return derive_seed(seed, kSearch); }

fs::path default_output_dir() {
  if (const char* env = std::getenv("MTLCHOICE_OUT"); env && *env) return env;
  return "mtlchoice_out";
}

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir) {
  check_keys(j,
             {"data", "split", "seed", "model", "hyper", "search", "ties", "feature_map", "fit",
              "interpret", "output_dir"},
             "config");
  ExperimentConfig c;
  get_to(j, "seed", c.seed, "config");

  if (!j.contains("data")) throw ConfigError("data: required");
  const Json& data = j.at("data");
  check_keys(data, {"synth", "csv"}, "data");
  if (data.contains("synth") == data.contains("csv")) {
    throw ConfigError("data: give exactly one of 'synth' and 'csv'");
  }
  if (data.contains("synth")) {
    c.synth = parse_synth(data.at("synth"));
  } else {
    c.csv = parse_csv(data.at("csv"), base_dir);
  }

  if (j.contains("split")) {
    check_keys(j.at("split"), {"ratio"}, "split");
    get_to(j.at("split"), "ratio", c.split_ratio, "split");
  }
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) {
    throw ConfigError("split.ratio: must lie strictly between 0 and 1");
  }

  if (j.contains("model")) c.model = parse_model_kind(j.at("model").get<std::string>());

  c.hyper.seed = derive_seed(c.seed, kHyper);
  if (j.contains("hyper")) c.hyper = hyper_from_json(j.at("hyper"), c.hyper);
  try {
    c.hyper.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("hyper: ") + e.what());
  }

  if (j.contains("search")) c.search = parse_search(j.at("search"));

  if (j.contains("ties")) {
    std::size_t i = 0;
    for (const auto& t : j.at("ties")) {
      const std::string tw = "ties[" + std::to_string(i++) + "]";
      check_keys(t, {"feature", "alternative"}, tw);
      CoefficientTie tie;
      get_to(t, "feature", tie.feature, tw);
      get_to(t, "alternative", tie.alternative, tw);
      c.ties.push_back(tie);
    }
  }
  if (j.contains("feature_map")) {
    const auto m = parse_feature_map(j.at("feature_map").get<std::string>());
    if (!m) throw ConfigError("feature_map: expected identity or poly2");
    c.feature_map = *m;
  }
  if (j.contains("fit")) {
    const Json& f = j.at("fit");
    check_keys(f, {"max_iterations", "gradient_tolerance", "divergence_norm"}, "fit");
    get_to(f, "max_iterations", c.fit.max_iterations, "fit");
    get_to(f, "gradient_tolerance", c.fit.gradient_tolerance, "fit");
    get_to(f, "divergence_norm", c.fit.divergence_norm, "fit");
  }
  if (j.contains("interpret")) c.interpret = parse_interpret(j.at("interpret"));
  if (j.contains("output_dir")) {
    const fs::path out = j.at("output_dir").get<std::string>();
    c.output_dir = out.is_absolute() ? out : base_dir / out;
  }

  const FeatureSchema& schema = c.synth ? c.synth->resolve().schema : c.csv->schema;
  if (!c.ties.empty()) resolve_ties(schema, c.ties, c.feature_map);
  for (const auto& curve : c.interpret.curves) curve.validate(schema);

  Json canonical = j;
  canonical.erase("output_dir");
  c.hash = hex64(fnv1a(canonical.dump()));
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(load_json(path), path.parent_path());
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData out;
  if (config.synth) {
    out.raw = generate(config.synth->resolve(), config.synth->n_rp, config.synth->n_sp, config.seed);
  } else {
    out.raw = load_csv(config.csv->path, config.csv->schema);
  }
  auto parts = split(out.raw, config.split_ratio, config.split_seed());
  out.raw_train = std::move(parts.train);
  out.raw_test = std::move(parts.test);
  out.standardized = standardize(out.raw_train, out.raw_test);
  return out;
}

std::shared_ptr<const ChoiceModel> fit_model(ModelKind kind, const ExperimentConfig& config,
                                             const Dataset& train,
                                             std::vector<std::string>* warnings) {
  auto note = [&](const FitStatus& s) {
    if (warnings) warnings->insert(warnings->end(), s.warnings.begin(), s.warnings.end());
  };
  const FeatureSchema& schema = train.schema();
  switch (kind) {
    case ModelKind::Mtldnn:
    case ModelKind::DnnSpt:
    case ModelKind::DnnJoint: {
      MtldnnModel model = build(hyper_for(kind, config.hyper), schema.dim(),
                                schema.num_rp_alternatives(), schema.num_sp_alternatives(),
                                schema.av_specific_indices());
      return std::make_shared<const MtldnnModel>(mtlchoice::train(std::move(model), train).model);
    }
    case ModelKind::NlC:
    case ModelKind::NlNc: {
      const std::vector<CoefficientTie> none;
      NlModel m = fit_nl(train, kind == ModelKind::NlC ? config.ties : none, config.fit,
                         config.feature_map);
      note(m.status);
      return std::make_shared<const NlModel>(std::move(m));
    }
    case ModelKind::MnlSpt: {
      MnlSptModel m = fit_mnl_spt(train, config.fit, config.feature_map);
      note(m.rp.status);
      note(m.sp.status);
      return std::make_shared<const MnlSptModel>(std::move(m));
    }
    case ModelKind::MnlJoint: {
      MnlModel m = fit_mnl(train, Scope::Joint, config.fit, config.feature_map);
      m.mask_rp = config.hyper.mask_rp;
      note(m.status);
      return std::make_shared<const MnlModel>(std::move(m));
    }
  }
  throw ConfigError("unknown model kind");
}

CompareTable compare_models(const ExperimentConfig& config, const PreparedData& data) {
  if (config.ties.empty()) throw ConfigError("ties: compare needs ties for the nl-c column");
  const Dataset& train = data.standardized.train;
  const Dataset& test = data.standardized.test;

  const Selected sets{train, test, std::nullopt};
  const SearchResult search = run_search(config, sets);
  if (search.successful() == 0) throw TrainingError("every search run failed", -1, "search");
  const SearchEntry& best = search.ranked(0);
  const std::size_t k = std::min(config.search.top_k, search.successful());
  const EnsembleResult ensemble = ensemble_topk(search, k, train, test);

  ExperimentConfig tuned = config;
  tuned.hyper = best.hyper;
  CompareTable table;
  table.columns = {"MTLDNN", "MTLDNN-E", "DNN-SPT", "DNN-JOINT",
                   "NL-C",   "NL-NC",    "MNL-SPT", "MNL-JOINT"};
  table.rows = {"joint_test", "rp_test", "sp_test", "joint_train", "rp_train", "sp_train"};
  std::vector<Metrics> metrics;
  metrics.push_back(best.metrics);
  metrics.push_back(ensemble.metrics);
  for (ModelKind kind : {ModelKind::DnnSpt, ModelKind::DnnJoint, ModelKind::NlC, ModelKind::NlNc,
                         ModelKind::MnlSpt, ModelKind::MnlJoint}) {
    const auto model = fit_model(kind, tuned, train);
    metrics.push_back(evaluate(*model, train, test, config.hyper.lambda0));
  }
  table.values.assign(table.rows.size(), std::vector<double>(table.columns.size(), 0.0));
  for (std::size_t c = 0; c < metrics.size(); ++c) {
    const Metrics& m = metrics[c];
    const double col[] = {m.test.joint_accuracy,  m.test.rp_accuracy,  m.test.sp_accuracy,
                          m.train.joint_accuracy, m.train.rp_accuracy, m.train.sp_accuracy};
    for (std::size_t r = 0; r < table.rows.size(); ++r) table.values[r][c] = col[r];
  }
  return table;
}

std::vector<fs::path> run_command(const std::string& command, const ExperimentConfig& config,
                                  const RunOptions& options, std::ostream& log) {
  const fs::path out = output_dir(config, options);
  fs::create_directories(out);
  std::vector<fs::path> written;
  auto emit_text = [&](const std::string& name, const std::string& text) {
    write_text(out / name, text);
    written.push_back(out / name);
  };
  auto emit_json = [&](const std::string& name, const Json& j) { emit_text(name, j.dump(2) + "\n"); };
  const auto tags = provenance(config);
  // plain-text reports carry the same provenance lines as the CSVs
  auto emit_report = [&](const std::string& name, const std::string& text) {
    std::string head;
    for (const auto& t : tags) head += "# " + t + '\n';
    emit_text(name, head + text);
  };
  Json stamp{{"config_hash", config.hash}, {"seed", config.seed}};

  if (command == "synth") {
    if (!config.synth) throw ConfigError("data.synth: the synth command needs a synthetic source");
    const DgpSpec spec = config.synth->resolve();
    const Dataset data = generate(spec, config.synth->n_rp, config.synth->n_sp, config.seed);
    std::ostringstream csv;
    write_csv(csv, data, tags);
    emit_text("data.csv", csv.str());
    Json dgp = stamp;
    dgp["dgp"] = to_json(spec);
    dgp["n_rp"] = config.synth->n_rp;
    dgp["n_sp"] = config.synth->n_sp;
    emit_json("dgp.json", dgp);
    log << "wrote " << data.size() << " rows to " << (out / "data.csv").string() << '\n';
    return written;
  }

  if (command == "train") {
    require_ties_rule(config, config.model);
    const PreparedData data = prepare_data(config);
    std::vector<std::string> warnings = data.standardized.warnings;
    const Dataset& train = data.standardized.train;
    const Dataset& test = data.standardized.test;
    std::shared_ptr<const ChoiceModel> model;
    if (is_network(config.model)) {
      const HyperConfig hyper = hyper_for(config.model, config.hyper);
      const auto& schema = train.schema();
      TrainResult result =
          mtlchoice::train(build(hyper, schema.dim(), schema.num_rp_alternatives(),
                                 schema.num_sp_alternatives(), schema.av_specific_indices()),
                           train);
      std::ostringstream hist;
      for (const auto& t : tags) hist << "# " << t << '\n';
      hist << "iteration,total,rp_risk,sp_risk,shared_penalty,sp_penalty,similarity_penalty,"
              "trailing_mean_total\n";
      for (const auto& h : result.history) {
        const auto& l = h.batch_loss;
        hist << h.iteration << ',' << num(l.total) << ',' << num(l.rp_risk) << ','
             << num(l.sp_risk) << ',' << num(l.shared_penalty) << ',' << num(l.sp_penalty) << ','
             << num(l.similarity_penalty) << ',' << num(h.trailing_mean_total) << '\n';
      }
      emit_text("history.csv", hist.str());
      model = std::make_shared<const MtldnnModel>(std::move(result.model));
    } else {
      model = fit_model(config.model, config, train, &warnings);
    }
    const Metrics m = evaluate(*model, train, test, config.hyper.lambda0);
    emit_json("model.json", to_json(ModelFile{config.model, train.schema(),
                                              data.standardized.scaler, model, config.hash,
                                              config.seed}));
    Json mj = stamp;
    mj["model"] = std::string(to_string(config.model));
    mj["train"] = metrics_json(m.train);
    mj["test"] = metrics_json(m.test);
    mj["warnings"] = warnings;
    emit_json("metrics.json", mj);
    emit_report("metrics.txt", metrics_text(std::string(to_string(config.model)), m));
    for (const auto& w : warnings) log << "warning: " << w << '\n';
    log << metrics_text(std::string(to_string(config.model)), m);
    return written;
  }

  if (command == "search") {
    if (config.model != ModelKind::Mtldnn) throw ConfigError("model: search applies to mtldnn");
    const PreparedData data = prepare_data(config);
    const Selected sets = selection_sets(config, data);
    SearchResult result = run_search(config, sets);
    fs::create_directories(out / "models");
    const Scaler scaler =
        config.search.validation_ratio > 0.0 ? fit_scaler(split(data.raw_train,
                                                                1.0 - config.search.validation_ratio,
                                                                derive_seed(config.split_seed(), 1))
                                                              .train)
                                             : data.standardized.scaler;
    for (auto& e : result.entries) {
      if (e.failed) continue;
      std::ostringstream name;
      name << "models/draw_" << std::setw(4) << std::setfill('0') << e.draw << ".json";
      e.model_path = name.str();
      emit_json(e.model_path, to_json(ModelFile{ModelKind::Mtldnn, sets.fit.schema(), scaler,
                                                e.model, config.hash, e.hyper.seed}));
    }
    std::ostringstream report;
    write_search_report(report, result, tags);
    emit_text("search_report.csv", report.str());
    std::string summary = search_summary(result);
    if (result.successful() > 0 && result.ranked(0).holdout) {
      summary += "best holdout joint accuracy: " + num(result.ranked(0).holdout->joint_accuracy) + "\n";
    }
    emit_report("search_summary.txt", summary);
    log << summary;
    return written;
  }

  if (command == "evaluate") {
    if (options.models.size() != 1) throw InputError("evaluate needs exactly one --model file");
    const ModelFile file = model_file_from_json(load_json(options.models.front()));
    const PreparedData data = prepare_data(config);
    if (!(file.schema == data.raw.schema())) throw InputError("model schema does not match the data");
    const Metrics m = evaluate(*file.model, file.scaler.transform(data.raw_train),
                               file.scaler.transform(data.raw_test), config.hyper.lambda0);
    Json mj = stamp;
    mj["model"] = std::string(to_string(file.kind));
    mj["model_config_hash"] = file.config_hash;
    mj["train"] = metrics_json(m.train);
    mj["test"] = metrics_json(m.test);
    emit_json("evaluation.json", mj);
    emit_report("evaluation.txt", metrics_text(std::string(to_string(file.kind)), m));
    log << metrics_text(std::string(to_string(file.kind)), m);
    return written;
  }

  if (command == "ensemble" || command == "interpret") {
    std::vector<fs::path> paths = options.models;
    const std::size_t k = options.k.value_or(config.search.top_k);
    if (paths.empty()) {
      const fs::path report = options.report.empty() ? out / "search_report.csv" : options.report;
      paths = report_models(report, k);
    }
    const std::vector<ModelFile> files = load_models(paths);
    const PreparedData data = prepare_data(config);
    if (!(files.front().schema == data.raw.schema())) {
      throw InputError("model schema does not match the data");
    }
    const Scaler& scaler = files.front().scaler;
    std::vector<std::shared_ptr<const ChoiceModel>> members;
    for (const auto& f : files) {
      if (f.scaler.mean() != scaler.mean() || f.scaler.sd() != scaler.sd()) {
        throw InputError("model files were fitted with different scalers");
      }
      members.push_back(f.model);
    }
    const EnsembleModel ensemble(members);

    if (command == "ensemble") {
      const Metrics m = evaluate(ensemble, scaler.transform(data.raw_train),
                                 scaler.transform(data.raw_test), config.hyper.lambda0);
      Json mj = stamp;
      mj["k"] = files.size();
      mj["train"] = metrics_json(m.train);
      mj["test"] = metrics_json(m.test);
      emit_json("ensemble_metrics.json", mj);
      const std::string text = metrics_text("ensemble of " + std::to_string(files.size()), m);
      emit_report("ensemble_metrics.txt", text);
      log << text;
      return written;
    }

    const Dataset& rows = interpret_rows(data, config.interpret.rows);
    if (config.interpret.curves.empty() && config.interpret.elasticities.empty()) {
      throw ConfigError("interpret: no curves or elasticities requested");
    }
    std::vector<NamedModel> named;
    for (std::size_t i = 0; i < files.size(); ++i) {
      named.push_back({paths[i].stem().string(), files[i].model.get()});
    }
    for (std::size_t i = 0; i < config.interpret.curves.size(); ++i) {
      const CurveSpec& spec = config.interpret.curves[i];
      const CurveTable table = prob_curve(named, rows, scaler, spec);
      const std::string base = "curve_" + std::to_string(i) + "_" + spec.variable;
      std::ostringstream csv, svg;
      write_curve_csv(csv, table, tags);
      emit_text(base + ".csv", csv.str());
      write_curve_svg(svg, table, spec.variable + " (" + std::string(to_string(spec.task)) + ")");
      emit_text(base + ".svg", svg.str());
    }
    if (!config.interpret.elasticities.empty()) {
      std::vector<ElasticityResult> results;
      for (const auto& spec : config.interpret.elasticities) {
        results.push_back(elasticity(ensemble, rows, scaler, spec));
        log << spec.variable << " -> " << spec.alternative << ": " << num(results.back().mean)
            << " (" << results.back().excluded_rows << " rows excluded)\n";
      }
      std::ostringstream csv;
      write_elasticity_csv(csv, results, tags);
      emit_text("elasticities.csv", csv.str());
    }
    return written;
  }

  if (command == "compare") {
    const PreparedData data = prepare_data(config);
    const CompareTable table = compare_models(config, data);
    std::ostringstream csv, text;
    for (const auto& t : tags) csv << "# " << t << '\n';
    csv << "metric";
    for (const auto& c : table.columns) csv << ',' << c;
    csv << '\n';
    Json jt = stamp;
    jt["columns"] = table.columns;
    text << std::left << std::setw(12) << "" << std::right;
    for (const auto& c : table.columns) text << std::setw(11) << c;
    text << '\n' << std::fixed << std::setprecision(3);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      csv << table.rows[r];
      text << std::left << std::setw(12) << table.rows[r] << std::right;
      for (double v : table.values[r]) {
        csv << ',' << num(v);
        text << std::setw(11) << v;
      }
      csv << '\n';
      text << '\n';
      jt["rows"][table.rows[r]] = table.values[r];
    }
    emit_text("compare.csv", csv.str());
    emit_json("compare.json", jt);
    emit_report("compare.txt", text.str());
    log << text.str();
    return written;
  }

  throw ConfigError("unknown command '" + command + "'");
}

std::vector<std::string> verify_command(const std::string& command,
                                        const ExperimentConfig& config,
                                        const RunOptions& options,
                                        const std::vector<fs::path>& artifacts,
                                        std::ostream& log) {
  const fs::path out = output_dir(config, options);
  const fs::path scratch = out / ".verify";
  fs::remove_all(scratch);
  RunOptions again = options;
  again.out = scratch;
  if ((command == "ensemble" || command == "interpret") && again.report.empty() &&
      again.models.empty()) {
    again.report = out / "search_report.csv";
  }
  std::ostringstream quiet;
  run_command(command, config, again, quiet);
  std::vector<std::string> mismatches;
  for (const auto& a : artifacts) {
    const fs::path rel = fs::relative(a, out);
    if (read_bytes(a) != read_bytes(scratch / rel)) mismatches.push_back(rel.string());
  }
  fs::remove_all(scratch);
  log << "verify: " << artifacts.size() - mismatches.size() << '/' << artifacts.size()
      << " artifacts reproduced\n";
  return mismatches;
}

}  // namespace mtlchoice
