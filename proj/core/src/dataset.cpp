#include "mtlchoice/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mtlchoice/error.hpp"
#include "mtlchoice/rng.hpp"

namespace mtlchoice {

namespace {

constexpr double kZeroVariance = 1e-12;

std::optional<Index> find_name(const std::vector<std::string>& names, std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<Index>(it - names.begin());
}

void require_unique(const std::vector<std::string>& names, const char* what) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw ConfigError(std::string(what) + " contains an empty name");
    if (!seen.insert(n).second) {
      throw ConfigError(std::string(what) + " contains duplicate name '" + n + "'");
    }
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<long> parse_long(const std::string& s) {
  long value = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<std::string> names,
                             std::vector<std::string> av_specific,
                             std::vector<std::string> rp_alternatives,
                             std::vector<std::string> sp_alternatives)
    : names_(std::move(names)),
      av_specific_(std::move(av_specific)),
      rp_alternatives_(std::move(rp_alternatives)),
      sp_alternatives_(std::move(sp_alternatives)) {
  require_unique(names_, "feature names");
  require_unique(av_specific_, "SP-only feature list");
  require_unique(rp_alternatives_, "RP alternatives");
  require_unique(sp_alternatives_, "SP alternatives");
  if (names_.empty()) throw ConfigError("schema has no features");
  if (rp_alternatives_.size() < 2) throw ConfigError("RP needs at least two alternatives");
  if (sp_alternatives_.size() < rp_alternatives_.size()) {
    throw ConfigError("SP must offer at least the RP alternatives");
  }
  for (std::size_t k = 0; k < rp_alternatives_.size(); ++k) {
    if (sp_alternatives_[k] != rp_alternatives_[k]) {
      throw ConfigError("SP alternative " + std::to_string(k) + " ('" + sp_alternatives_[k] +
                        "') must match RP alternative '" + rp_alternatives_[k] + "'");
    }
  }
  av_mask_.assign(names_.size(), false);
  for (const auto& a : av_specific_) {
    auto idx = find_name(names_, a);
    if (!idx) throw ConfigError("SP-only feature '" + a + "' is not a schema feature");
    av_mask_[static_cast<std::size_t>(*idx)] = true;
  }
}

std::optional<Index> FeatureSchema::feature_index(std::string_view name) const {
  return find_name(names_, name);
}

std::optional<Index> FeatureSchema::alternative_index(std::string_view name, Task task) const {
  return find_name(alternatives(task), name);
}

std::vector<Index> FeatureSchema::av_specific_indices() const {
  std::vector<Index> out;
  for (std::size_t j = 0; j < av_mask_.size(); ++j) {
    if (av_mask_[j]) out.push_back(static_cast<Index>(j));
  }
  return out;
}

std::uint64_t FeatureSchema::hash() const {
  std::string text;
  auto append = [&text](const char* tag, const std::vector<std::string>& list) {
    text += tag;
    for (const auto& s : list) {
      text += s;
      text += '\x1f';
    }
    text += '\x1e';
  };
  append("features:", names_);
  append("sp_only:", av_specific_);
  append("rp:", rp_alternatives_);
  append("sp:", sp_alternatives_);
  return fnv1a(text);
}

Dataset::Dataset(FeatureSchema schema, Matrix features, std::vector<Task> tasks,
                 std::vector<Index> choices)
    : schema_(std::move(schema)),
      features_(std::move(features)),
      tasks_(std::move(tasks)),
      choices_(std::move(choices)) {
  if (features_.rows() != schema_.dim()) {
    throw ShapeError("feature matrix has " + std::to_string(features_.rows()) +
                     " rows, schema has " + std::to_string(schema_.dim()) + " features");
  }
  if (static_cast<std::size_t>(features_.cols()) != tasks_.size() ||
      tasks_.size() != choices_.size()) {
    throw ShapeError("features, tasks and choices have different lengths");
  }
  const auto av = schema_.av_specific_indices();
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const Index row = static_cast<Index>(i);
    const Index k = schema_.num_alternatives(tasks_[i]);
    if (choices_[i] < 0 || choices_[i] >= k) {
      throw IngestError("choice " + std::to_string(choices_[i]) + " outside [0, " +
                            std::to_string(k - 1) + "] for task " +
                            std::string(to_string(tasks_[i])),
                        i + 1);
    }
    if (!features_.col(row).allFinite()) throw IngestError("non-finite feature value", i + 1);
    if (tasks_[i] == Task::RP) {
      for (Index j : av) {
        if (features_(j, row) != 0.0) {
          throw IngestError("RP row has non-zero SP-only feature '" +
                                schema_.names()[static_cast<std::size_t>(j)] + "'",
                            i + 1);
        }
      }
    }
  }
}

Index Dataset::count(Task task) const {
  return static_cast<Index>(std::count(tasks_.begin(), tasks_.end(), task));
}

std::vector<Index> Dataset::indices(Task task) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i] == task) out.push_back(static_cast<Index>(i));
  }
  return out;
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Matrix f(features_.rows(), static_cast<Index>(rows.size()));
  std::vector<Task> t;
  std::vector<Index> c;
  t.reserve(rows.size());
  c.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= size()) throw ShapeError("subset row index out of range");
    f.col(static_cast<Index>(i)) = features_.col(r);
    t.push_back(task(r));
    c.push_back(choice(r));
  }
  return Dataset(schema_, std::move(f), std::move(t), std::move(c));
}

Dataset Dataset::only(Task task) const {
  const auto rows = indices(task);
  return subset(rows);
}

Dataset Dataset::with_features(Matrix features) const {
  return Dataset(schema_, std::move(features), tasks_, choices_);
}

Dataset read_csv(std::istream& in, const FeatureSchema& schema) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = split_fields(t);
    break;
  }
  if (header.empty()) throw IngestError("missing header", 0);

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IngestError("missing column '" + name + "'", 0);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t task_col = column_of("task");
  const std::size_t choice_col = column_of("choice");
  std::vector<std::size_t> feature_cols;
  for (const auto& name : schema.names()) feature_cols.push_back(column_of(name));

  std::vector<std::vector<double>> columns;
  std::vector<Task> tasks;
  std::vector<Index> choices;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++row;
    const auto fields = split_fields(t);
    if (fields.size() != header.size()) {
      throw IngestError("expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()),
                        row);
    }
    const auto task = parse_task(fields[task_col]);
    if (!task) throw IngestError("unknown task '" + fields[task_col] + "'", row);
    const auto choice = parse_long(fields[choice_col]);
    if (!choice) throw IngestError("unparseable choice '" + fields[choice_col] + "'", row);
    const Index k = schema.num_alternatives(*task);
    if (*choice < 0 || *choice >= k) {
      throw IngestError("choice " + std::to_string(*choice) + " outside [0, " +
                            std::to_string(k - 1) + "]",
                        row);
    }
    std::vector<double> values;
    values.reserve(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto v = parse_double(fields[feature_cols[j]]);
      if (!v) {
        throw IngestError("unparseable number '" + fields[feature_cols[j]] + "' in column '" +
                              schema.names()[j] + "'",
                          row);
      }
      values.push_back(*v);
    }
    columns.push_back(std::move(values));
    tasks.push_back(*task);
    choices.push_back(*choice);
  }

  Matrix features(schema.dim(), static_cast<Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    for (std::size_t j = 0; j < columns[i].size(); ++j) {
      features(static_cast<Index>(j), static_cast<Index>(i)) = columns[i][j];
    }
  }
  return Dataset(schema, std::move(features), std::move(tasks), std::move(choices));
}

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path.string() + "'", 0);
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data, std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "task,choice";
  for (const auto& n : data.schema().names()) out << ',' << n;
  out << '\n';
  char buffer[64];
  for (Index i = 0; i < data.size(); ++i) {
    out << to_string(data.task(i)) << ',' << data.choice(i);
    for (Index j = 0; j < data.features().rows(); ++j) {
      auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, data.features()(j, i));
      out << ',' << std::string_view(buffer, static_cast<std::size_t>(ptr - buffer));
    }
    out << '\n';
  }
}

TrainTestSplit split(const Dataset& data, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("split ratio must lie in (0, 1)");
  std::vector<Index> train_rows, test_rows;
  for (Task task : {Task::RP, Task::SP}) {
    auto rows = data.indices(task);
    if (rows.empty()) {
      throw InputError("cannot split: no " + std::string(to_string(task)) + " rows");
    }
    Rng rng(derive_seed(seed, task == Task::RP ? 1 : 2));
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(rows.size())));
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + n_train);
    test_rows.insert(test_rows.end(), rows.begin() + n_train, rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.subset(train_rows), data.subset(test_rows)};
}

Scaler::Scaler(FeatureSchema schema, Vector mean, Vector sd, std::vector<bool> scaled)
    : schema_(std::move(schema)), mean_(std::move(mean)), sd_(std::move(sd)),
      scaled_(std::move(scaled)) {
  const auto d = schema_.dim();
  if (mean_.size() != d || sd_.size() != d || static_cast<Index>(scaled_.size()) != d) {
    throw ShapeError("scaler statistics do not match the schema dimension");
  }
}

Scaler Scaler::identity(const FeatureSchema& schema) {
  return Scaler(schema, Vector::Zero(schema.dim()), Vector::Ones(schema.dim()),
                std::vector<bool>(static_cast<std::size_t>(schema.dim()), false));
}

double Scaler::derivative(Index j) const {
  return scaled_[static_cast<std::size_t>(j)] ? 1.0 / sd_[j] : 1.0;
}

Vector Scaler::transform(const Vector& raw, Task task) const {
  if (raw.size() != mean_.size()) throw ShapeError("scaler input has the wrong dimension");
  Vector out = raw;
  for (Index j = 0; j < raw.size(); ++j) {
    if (task == Task::RP && schema_.is_av_specific(j)) {
      out[j] = 0.0;
    } else if (scaled_[static_cast<std::size_t>(j)]) {
      out[j] = (raw[j] - mean_[j]) / sd_[j];
    }
  }
  return out;
}

Vector Scaler::inverse(const Vector& standardized, Task task) const {
  if (standardized.size() != mean_.size()) {
    throw ShapeError("scaler input has the wrong dimension");
  }
  Vector out = standardized;
  for (Index j = 0; j < out.size(); ++j) {
    if (task == Task::RP && schema_.is_av_specific(j)) {
      out[j] = 0.0;
    } else if (scaled_[static_cast<std::size_t>(j)]) {
      out[j] = standardized[j] * sd_[j] + mean_[j];
    }
  }
  return out;
}

Dataset Scaler::transform(const Dataset& raw) const {
  Matrix f(raw.features().rows(), raw.size());
  for (Index i = 0; i < raw.size(); ++i) f.col(i) = transform(Vector(raw.x(i)), raw.task(i));
  return raw.with_features(std::move(f));
}

Dataset Scaler::inverse(const Dataset& standardized) const {
  Matrix f(standardized.features().rows(), standardized.size());
  for (Index i = 0; i < standardized.size(); ++i) {
    f.col(i) = inverse(Vector(standardized.x(i)), standardized.task(i));
  }
  return standardized.with_features(std::move(f));
}

Scaler fit_scaler(const Dataset& train, std::vector<std::string>* warnings) {
  if (train.empty()) throw InputError("cannot standardize an empty training set");
  const auto& schema = train.schema();
  const Index d = schema.dim();
  Vector mean = Vector::Zero(d);
  Vector sd = Vector::Ones(d);
  std::vector<bool> scaled(static_cast<std::size_t>(d), false);
  for (Index j = 0; j < d; ++j) {
    const bool sp_only = schema.is_av_specific(j);
    double sum = 0.0;
    Index n = 0;
    for (Index i = 0; i < train.size(); ++i) {
      if (sp_only && train.task(i) == Task::RP) continue;
      sum += train.features()(j, i);
      ++n;
    }
    if (n == 0) {
      if (warnings) warnings->push_back("feature '" + schema.names()[j] + "' has no rows; left unscaled");
      continue;
    }
    const double m = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Index i = 0; i < train.size(); ++i) {
      if (sp_only && train.task(i) == Task::RP) continue;
      const double dev = train.features()(j, i) - m;
      ss += dev * dev;
    }
    const double s = std::sqrt(ss / static_cast<double>(n));
    if (!(s > kZeroVariance * std::max(1.0, std::abs(m)))) {
      if (warnings) {
        warnings->push_back("feature '" + schema.names()[static_cast<std::size_t>(j)] +
                            "' has zero variance; left unscaled");
      }
      continue;
    }
    mean[j] = m;
    sd[j] = s;
    scaled[static_cast<std::size_t>(j)] = true;
  }
  return Scaler(schema, std::move(mean), std::move(sd), std::move(scaled));
}

Standardized standardize(const Dataset& train, const Dataset& test) {
  Standardized out;
  out.scaler = fit_scaler(train, &out.warnings);
  out.train = out.scaler.transform(train);
  out.test = out.scaler.transform(test);
  return out;
}

double accuracy(std::span<const Vector> probabilities, std::span<const Index> labels) {
  if (probabilities.size() != labels.size()) {
    throw ShapeError("probabilities and labels have different lengths");
  }
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (argmax(probabilities[i]) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace mtlchoice
