#include "mtlchoice/search.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "mtlchoice/error.hpp"

namespace mtlchoice {

namespace {

template <typename T>
const T& pick(const std::vector<T>& values, Rng& rng) {
  std::uniform_int_distribution<std::size_t> index(0, values.size() - 1);
  return values[index(rng)];
}

template <typename T>
bool has(const std::vector<T>& values, T v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_task_metrics(std::ostream& out, const TaskMetrics& m) {
  out << ',' << num(m.joint_accuracy) << ',' << num(m.rp_accuracy) << ','
      << num(m.sp_accuracy) << ',' << num(m.risk);
}

SearchEntry run_one(const Dataset& train, const Dataset& select,
                    const Dataset* holdout, HyperConfig hyper, std::size_t draw) {
  SearchEntry entry;
  entry.draw = draw;
  entry.hyper = hyper;
  try {
    const FeatureSchema& schema = train.schema();
    MtldnnModel model =
        build(hyper, train.features().rows(), schema.num_alternatives(Task::RP),
              schema.num_alternatives(Task::SP), schema.av_specific_indices());
    TrainResult trained = mtlchoice::train(std::move(model), train);
    if (!trained.history.empty()) entry.final_loss = trained.history.back().batch_loss;
    auto shared = std::make_shared<const MtldnnModel>(std::move(trained.model));
    entry.metrics = evaluate(*shared, train, select, hyper.lambda0);
    if (holdout) entry.holdout = evaluate(*shared, *holdout, hyper.lambda0);
    entry.model = std::move(shared);
  } catch (const Error& e) {
    entry.failed = true;
    entry.failure = e.what();
  }
  return entry;
}

}  // namespace

SearchSpace SearchSpace::standard() { return SearchSpace{}; }

SearchSpace SearchSpace::desk() {
  SearchSpace space;
  space.shared_depth = {1, 2, 3};
  space.task_depth = {1, 2, 3};
  space.width = {25, 50};
  space.n_iter = 2000;
  return space;
}

void SearchSpace::validate() const {
  if (shared_depth.empty() || task_depth.empty() || width.empty() || lambda1.empty() ||
      lambda2.empty() || lambda3.empty()) {
    throw ConfigError("search space has an empty dimension");
  }
  HyperConfig probe;
  probe.n_iter = n_iter;
  probe.batch = batch;
  probe.learning_rate = learning_rate;
  for (int m1 : shared_depth) {
    for (int m2 : task_depth) {
      probe.shared_depth = m1;
      probe.task_depth = m2;
      for (int w : width) {
        probe.width = w;
        probe.validate();
      }
    }
  }
  for (const auto* list : {&lambda1, &lambda2, &lambda3}) {
    for (double v : *list) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("penalty weights must be >= 0");
    }
  }
}

bool SearchSpace::contains(const HyperConfig& h) const {
  return has(shared_depth, h.shared_depth) && has(task_depth, h.task_depth) &&
         has(width, h.width) && has(lambda1, h.lambda1) && has(lambda2, h.lambda2) &&
         has(lambda3, h.lambda3) && h.n_iter == n_iter && h.batch == batch &&
         h.learning_rate == learning_rate;
}

HyperConfig sample(const SearchSpace& space, Rng& rng) {
  HyperConfig h;
  h.shared_depth = pick(space.shared_depth, rng);
  h.task_depth = pick(space.task_depth, rng);
  h.width = pick(space.width, rng);
  h.lambda1 = pick(space.lambda1, rng);
  h.lambda2 = pick(space.lambda2, rng);
  h.lambda3 = pick(space.lambda3, rng);
  h.n_iter = space.n_iter;
  h.batch = space.batch;
  h.learning_rate = space.learning_rate;
  h.seed = 0;
  return h;
}

std::string to_string(Selection selection) {
  return selection == Selection::TestRisk ? "test_risk" : "test_joint_accuracy";
}

Selection parse_selection(std::string_view text) {
  if (text == "test_risk") return Selection::TestRisk;
  if (text == "test_joint_accuracy") return Selection::TestJointAccuracy;
  throw ConfigError("unknown selection criterion '" + std::string(text) + "'");
}

const SearchEntry& SearchResult::ranked(std::size_t position) const {
  if (position >= ranking.size()) throw InputError("ranking position out of range");
  return entries[ranking[position]];
}

std::vector<std::size_t> rank_entries(const std::vector<SearchEntry>& entries,
                                      Selection selection) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].failed) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const TaskMetrics& ma = entries[a].metrics.test;
    const TaskMetrics& mb = entries[b].metrics.test;
    if (selection == Selection::TestRisk) return ma.risk < mb.risk;
    return ma.joint_accuracy > mb.joint_accuracy;
  });
  return order;
}

SearchResult random_search(const SearchSpace& space, const Dataset& train, const Dataset& select,
                           const SearchOptions& options, const Dataset* holdout) {
  space.validate();
  if (options.draws < 1) throw ConfigError("search needs at least one draw");
  if (options.workers < 1) throw ConfigError("workers must be at least 1");
  if (select.empty()) throw InputError("selection data is empty");

  std::vector<HyperConfig> configs;
  Rng rng(derive_seed(options.seed, 0));
  for (int i = 0; i < options.draws; ++i) {
    HyperConfig h = sample(space, rng);
    h.seed = derive_seed(options.seed, static_cast<std::uint64_t>(i) + 1);
    configs.push_back(h);
  }

  SearchResult result;
  result.selection = options.selection;
  result.entries.resize(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      result.entries[i] = run_one(train, select, holdout, configs[i], i);
    }
  };
  const int threads = std::min<int>(options.workers, options.draws);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  result.ranking = rank_entries(result.entries, options.selection);
  return result;
}

EnsembleModel::EnsembleModel(std::vector<std::shared_ptr<const ChoiceModel>> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw InputError("an ensemble needs at least one member");
  for (const auto& m : members_) {
    if (!m) throw InputError("null ensemble member");
    for (Task t : {Task::RP, Task::SP}) {
      if (m->num_alternatives(t) != members_.front()->num_alternatives(t)) {
        throw ShapeError("ensemble members disagree on the alternative count");
      }
    }
  }
}

Index EnsembleModel::num_alternatives(Task task) const {
  return members_.front()->num_alternatives(task);
}

Vector EnsembleModel::predict(const Vector& x, Task task) const {
  Vector sum = Vector::Zero(num_alternatives(task));
  for (const auto& m : members_) sum += m->predict(x, task);
  return sum / static_cast<double>(members_.size());
}

Vector EnsembleModel::probability_gradient(const Vector& x, Task task, Index alternative) const {
  Vector sum = Vector::Zero(x.size());
  for (const auto& m : members_) sum += m->probability_gradient(x, task, alternative);
  return sum / static_cast<double>(members_.size());
}

Matrix EnsembleModel::predict_columns(const Matrix& inputs, Task task) const {
  Matrix sum = Matrix::Zero(num_alternatives(task), inputs.cols());
  for (const auto& m : members_) sum += m->predict_columns(inputs, task);
  return sum / static_cast<double>(members_.size());
}

EnsembleResult ensemble_topk(const SearchResult& result, std::size_t k, const Dataset& train,
                             const Dataset& test) {
  if (k == 0) throw InputError("ensemble size must be at least 1");
  if (k > result.successful()) {
    throw InputError("ensemble size " + std::to_string(k) + " exceeds the " +
                     std::to_string(result.successful()) + " successful runs");
  }
  std::vector<std::shared_ptr<const ChoiceModel>> members;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& model = result.ranked(i).model;
    if (!model) throw InputError("search entry has no model attached");
    members.push_back(model);
  }
  auto ensemble = std::make_shared<const EnsembleModel>(std::move(members));
  EnsembleResult out;
  out.metrics = evaluate(*ensemble, train, test, result.ranked(0).hyper.lambda0);
  out.model = std::move(ensemble);
  return out;
}

void write_search_report(std::ostream& out, const SearchResult& result,
                         const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "rank,draw,status,shared_depth,task_depth,width,lambda1,lambda2,lambda3,n_iter,batch,"
         "learning_rate,seed,train_joint_accuracy,train_rp_accuracy,train_sp_accuracy,"
         "train_risk,test_joint_accuracy,test_rp_accuracy,test_sp_accuracy,test_risk,"
         "final_total_loss,model_path,failure\n";
  std::vector<long> rank_of(result.entries.size(), 0);
  for (std::size_t r = 0; r < result.ranking.size(); ++r) {
    rank_of[result.ranking[r]] = static_cast<long>(r) + 1;
  }
  auto row = [&](std::size_t i) {
    const SearchEntry& e = result.entries[i];
    const HyperConfig& h = e.hyper;
    out << (e.failed ? std::string() : std::to_string(rank_of[i])) << ',' << e.draw << ','
        << (e.failed ? "failed" : "ok") << ',' << h.shared_depth << ',' << h.task_depth << ','
        << h.width << ',' << num(h.lambda1) << ',' << num(h.lambda2) << ',' << num(h.lambda3)
        << ',' << h.n_iter << ',' << h.batch << ',' << num(h.learning_rate) << ',' << h.seed;
    write_task_metrics(out, e.metrics.train);
    write_task_metrics(out, e.metrics.test);
    std::string failure = e.failure;
    std::replace(failure.begin(), failure.end(), ',', ';');
    std::replace(failure.begin(), failure.end(), '\n', ' ');
    out << ',' << num(e.final_loss.total) << ',' << e.model_path << ',' << failure << '\n';
  };
  for (std::size_t i : result.ranking) row(i);
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    if (result.entries[i].failed) row(i);
  }
}

std::string search_summary(const SearchResult& result) {
  std::ostringstream s;
  s << "draws: " << result.entries.size() << '\n'
    << "successful: " << result.successful() << '\n'
    << "selection: " << to_string(result.selection) << '\n';
  if (result.successful() > 0) {
    const SearchEntry& best = result.ranked(0);
    const HyperConfig& h = best.hyper;
    s << "best draw: " << best.draw << " (M1=" << h.shared_depth << " M2=" << h.task_depth
      << " width=" << h.width << " lambda1=" << num(h.lambda1) << " lambda2=" << num(h.lambda2)
      << " lambda3=" << num(h.lambda3) << ")\n"
      << "best test joint accuracy: " << num(best.metrics.test.joint_accuracy) << '\n'
      << "best test risk: " << num(best.metrics.test.risk) << '\n';
  }
  return s.str();
}

}  // namespace mtlchoice
