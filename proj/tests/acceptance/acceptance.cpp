// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "mtlchoice/experiment.hpp"
#include "mtlchoice/finite_diff.hpp"
#include "mtlchoice/interpret.hpp"
#include "mtlchoice/mnl.hpp"
#include "mtlchoice/mtldnn.hpp"
#include "mtlchoice/nl.hpp"
#include "mtlchoice/search.hpp"
#include "mtlchoice/synth.hpp"

using namespace mtlchoice;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- gradients

// Smallest |pre-activation| over every ReLU unit the batch passes through.
double relu_margin(const NetworkParams& p, const Batch& b) {
  double margin = INFINITY;
  auto scan = [&](const Matrix& in, const LayerStack& layers) {
    StackCache cache;
    const Matrix out = forward_cached(in, layers, cache);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].activation == Activation::ReLU && cache.pre_activations[l].size() > 0) {
        margin = std::min(margin, cache.pre_activations[l].cwiseAbs().minCoeff());
      }
    }
    return out;
  };
  for (const auto& [inputs, head] : {std::pair{&b.rp_inputs, &p.rp_head},
                                     std::pair{&b.sp_inputs, &p.sp_head}}) {
    if (inputs->cols() == 0) continue;
    const Matrix h = scan(*inputs, p.shared);
    if (!head->empty()) scan(h, *head);
  }
  return margin;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240601);
  std::normal_distribution<double> normal;
  const Index d = 4, kr = 3, ks = 4;
  const std::vector<Index> sp_only{3};
  int instances = 0, redraws = 0;
  double worst = 0.0;
  int lambda_combo = 0;
  for (int m1 = 0; m1 <= 3; ++m1) {
    for (int m2 = 0; m2 <= 3; ++m2) {
      if (m1 + m2 == 0) continue;
      for (int width : {5, 25}) {
        for (int rep = 0; rep < 4; ++rep, ++lambda_combo) {
          HyperConfig h;
          h.shared_depth = m1;
          h.task_depth = m2;
          h.width = width;
          h.seed = rng();
          MtldnnModel m = build(h, d, kr, ks, sp_only);
          for (auto* s : {&m.params.shared, &m.params.rp_head, &m.params.sp_head})
            for (auto& l : *s) l.bias = Vector::NullaryExpr(l.bias.size(), [&] { return 0.3 * normal(rng); });
          if (!m.params.is_joint()) m.params.log_temperature = 0.5 * normal(rng);

          LossSpec spec = m.loss_spec();
          // cycle through all eight lambda on/off patterns
          spec.lambda1 = (lambda_combo & 1) ? 1e-2 : 0.0;
          spec.lambda2 = (lambda_combo & 2) ? 1e-2 : 0.0;
          spec.lambda3 = (lambda_combo & 4) ? 1e-2 : 0.0;

          Batch b;
          for (int attempt = 0;; ++attempt) {
            b = Batch{};
            b.rp_inputs = Matrix::NullaryExpr(d, 6, [&] { return normal(rng); });
            b.rp_inputs.row(3).setZero();
            b.sp_inputs = Matrix::NullaryExpr(d, 6, [&] { return normal(rng); });
            for (int i = 0; i < 6; ++i) {
              b.rp_labels.push_back(static_cast<Index>(rng() % kr));
              b.sp_labels.push_back(static_cast<Index>(rng() % ks));
            }
            // a central difference straddling a ReLU kink is not a derivative
            if (relu_margin(m.params, b) > 1e-3) break;
            ++redraws;
          }
          const Vector analytic = flatten(backward(m.params, b, spec).gradient);
          const Vector numeric = flatten(finite_diff_grad(
              [&](const NetworkParams& q) { return evaluate_loss(q, b, spec).total; }, m.params,
              1e-5));
          for (Index i = 0; i < analytic.size(); ++i) {
            const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3});
            worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
          }
          ++instances;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {instances >= 100 && worst < 1e-5 && secs < 60.0,
          fmt("%d instances, max relative error %.2e, %d batches redrawn near ReLU kinks, %.1fs",
              instances, worst, redraws, secs)};
}

// ---------------------------------------------------------------- MNL

Outcome mnl_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const DgpSpec spec = two_feature_linear_dgp();
  const MnlModel m = fit_mnl(generate(spec, 10000, 1, 101), Scope::RP);
  const double coef_err = (m.beta - spec.beta_rp).cwiseAbs().maxCoeff();

  // Binary logit on 60 rows: the MLE must beat an 81 x 81 grid over (intercept, slope).
  FeatureSchema s({"x"}, {}, {"a", "b"}, {"a", "b"});
  Rng rng(102);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u;
  Matrix f(1, 60);
  std::vector<Index> y;
  for (Index i = 0; i < 60; ++i) {
    f(0, i) = n(rng);
    y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-(0.4 - 0.9 * f(0, i)))) ? 0 : 1);
  }
  const Dataset small(s, f, std::vector<Task>(60, Task::RP), y);
  const MnlModel mle = fit_mnl(small, Scope::RP);
  const double best = mnl_log_likelihood(mle, small);
  MnlModel probe = mle;
  int beaten = 0;
  for (int i = 0; i <= 80; ++i) {
    for (int j = 0; j <= 80; ++j) {
      probe.beta(0, 0) = -3.0 + 6.0 * i / 80;
      probe.beta(0, 1) = -3.0 + 6.0 * j / 80;
      if (mnl_log_likelihood(probe, small) > best) ++beaten;
    }
  }
  const double secs = seconds_since(t0);
  return {coef_err <= 0.1 && beaten == 0 && secs < 30.0,
          fmt("max |beta - truth| %.4f, grid points above the MLE %d of 6561, %.1fs", coef_err,
              beaten, secs)};
}

// ---------------------------------------------------------------- NL

std::vector<CoefficientTie> travel_ties() {
  std::vector<CoefficientTie> t;
  for (const char* alt : {"walk", "transit", "drive"})
    for (const char* f : {"walk_time", "transit_cost", "drive_cost"}) t.push_back({f, alt});
  return t;
}

Outcome nl_scale_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const DgpSpec spec = mode_choice_dgp(DgpKind::ScaledNl, 2.0);
  const auto ties = travel_ties();
  bool all_in = true;
  std::string thetas;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset raw = generate(spec, 20000, 20000, seed);
    const Dataset z = standardize(raw, raw).train;
    const double theta = fit_nl(z, ties).theta();
    all_in = all_in && theta >= 1.8 && theta <= 2.2;
    thetas += fmt("%s%.3f", seed == 1 ? "" : ", ", theta);
  }
  const double secs = seconds_since(t0);
  return {all_in && secs < 120.0, fmt("theta over 5 seeds: %s, %.1fs", thetas.c_str(), secs)};
}

Outcome theta_non_identification() {
  const Dataset raw = generate(mode_choice_dgp(DgpKind::ScaledNl), 2000, 2000, 7);
  const Dataset z = standardize(raw, raw).train;
  const NlModel m = fit_nl(z, {});
  const Dataset rp = z.only(Task::RP), sp = z.only(Task::SP);
  const double base = nl_risk(m.beta_rp, m.beta_sp, m.theta(), rp, sp);
  const double n = static_cast<double>(z.size());
  double worst = 0.0;
  for (double c : {0.5, 2.0, 10.0}) {
    const double r = nl_risk(m.beta_rp, c * m.beta_sp, c * m.theta(), rp, sp);
    worst = std::max(worst, std::abs(r - base) * n);  // summed log-likelihood units
  }
  return {worst < 1e-10 && !m.theta_identified,
          fmt("max log-likelihood change %.2e, theta reported unidentified: %s", worst,
              m.theta_identified ? "no" : "yes")};
}

// ---------------------------------------------------------------- MTLDNN

struct NonlinearData {
  Dataset raw, train, test;
  Scaler scaler;
};

Outcome decoupling() {
  const Dataset raw = generate(mode_choice_dgp(DgpKind::Nonlinear), 1000, 2000, 31);
  const Dataset z = standardize(raw, raw).train;
  HyperConfig h;
  h.shared_depth = 0;
  h.task_depth = 3;
  h.width = 25;
  h.lambda3 = 0.0;
  h.n_iter = 1000;
  h.batch = 100;
  h.seed = 32;
  const auto& s = z.schema();
  auto fit = [&](const Dataset& d) {
    return train(build(h, s.dim(), s.num_rp_alternatives(), s.num_sp_alternatives(),
                       s.av_specific_indices()),
                 d)
        .model;
  };
  const MtldnnModel joint = fit(z);
  const MtldnnModel rp_only = fit(z.only(Task::RP));
  const MtldnnModel sp_only = fit(z.only(Task::SP));
  double worst = 0.0;
  auto compare = [&](const LayerStack& a, const LayerStack& b) {
    for (std::size_t l = 0; l < a.size(); ++l) {
      worst = std::max(worst, (a[l].weights - b[l].weights).cwiseAbs().maxCoeff());
      worst = std::max(worst, (a[l].bias - b[l].bias).cwiseAbs().maxCoeff());
    }
  };
  compare(joint.params.rp_head, rp_only.params.rp_head);
  compare(joint.params.sp_head, sp_only.params.sp_head);
  worst = std::max(worst, std::abs(joint.params.log_temperature - sp_only.params.log_temperature));
  return {worst < 1e-10, fmt("max per-parameter deviation after 1000 iterations %.2e", worst)};
}

Outcome lambda3_response() {
  const Dataset raw = generate(mode_choice_dgp(DgpKind::Nonlinear), 1000, 2000, 41);
  const Dataset z = standardize(raw, raw).train;
  const auto& s = z.schema();
  std::vector<double> dist;
  std::string detail = "||w~sp - w_rp|| at lambda3 =";
  for (double l3 : {0.0, 1e-4, 1e-2, 5e-1, 1e2}) {
    HyperConfig h;
    h.shared_depth = 1;
    h.task_depth = 2;
    h.width = 25;
    h.lambda3 = l3;
    h.n_iter = 3000;
    h.seed = 42;
    const MtldnnModel m = train(build(h, s.dim(), s.num_rp_alternatives(), s.num_sp_alternatives(),
                                      s.av_specific_indices()),
                                z)
                              .model;
    dist.push_back(std::sqrt(similarity_distance_squared(m.params, m.sp_only_inputs)));
    detail += fmt(" %g: %.4f;", l3, dist.back());
  }
  const double ratio = dist.front() / dist.back();
  return {ratio >= 10.0, detail + fmt(" ratio %.1f", ratio)};
}

NonlinearData nonlinear_data() {
  const Dataset raw = generate(mode_choice_dgp(DgpKind::Nonlinear), 2000, 8000, 2024);
  const auto parts = split(raw, 0.7, 2025);
  const auto z = standardize(parts.train, parts.test);
  return {raw, z.train, z.test, z.scaler};
}

struct GapResult {
  Outcome outcome;
  std::shared_ptr<const MtldnnModel> best;
};

GapResult misspecification_gap(const NonlinearData& d) {
  const auto t0 = std::chrono::steady_clock::now();
  // Selection uses a validation slice of the training split; the test split stays untouched.
  const auto inner = split(d.train, 0.8, 2026);
  SearchOptions o;
  o.draws = 20;
  o.seed = 2027;
  const SearchResult r = random_search(SearchSpace::desk(), inner.train, inner.test, o, &d.test);
  if (r.successful() == 0) return {{false, "every search draw failed"}, nullptr};
  const SearchEntry& best = r.ranked(0);
  const double mtl = best.holdout->joint_accuracy;
  const double mnl = evaluate(fit_mnl_spt(d.train), d.test).joint_accuracy;
  const double nl = evaluate(fit_nl(d.train, {}), d.test).joint_accuracy;
  const double secs = seconds_since(t0);
  const double gap = mtl - std::max(mnl, nl);
  return {{gap >= 0.03 && secs < 600.0,
           fmt("joint test accuracy MTLDNN %.4f (draw %zu), MNL-SPT %.4f, NL-NC %.4f, gap %.1f pp, "
               "%.0fs",
               mtl, best.draw, mnl, nl, 100.0 * gap, secs)},
          best.model};
}

Outcome architecture_sweep(const NonlinearData& d) {
  const auto& s = d.train.schema();
  std::vector<double> acc;
  std::string detail;
  for (int m1 = 5; m1 >= 0; --m1) {
    HyperConfig h;
    h.shared_depth = m1;
    h.task_depth = 5 - m1;
    h.width = 25;
    h.lambda1 = 1e-4;
    h.lambda2 = 1e-4;
    h.lambda3 = 0.0;
    h.n_iter = 4000;
    h.seed = 51;
    const MtldnnModel m = train(build(h, s.dim(), s.num_rp_alternatives(), s.num_sp_alternatives(),
                                      s.av_specific_indices()),
                                d.train)
                              .model;
    acc.push_back(evaluate(m, d.test).joint_accuracy);
    detail += fmt("%s(%d-%d) %.4f", m1 == 5 ? "" : ", ", m1, 5 - m1, acc.back());
  }
  const double boundary = std::max(acc.front(), acc.back());
  const double mixed = *std::max_element(acc.begin() + 1, acc.end() - 1);
  return {mixed >= boundary, detail};
}

// ---------------------------------------------------------------- interpretation

Outcome interpretation(const std::shared_ptr<const MtldnnModel>& net, const NonlinearData& d) {
  const Scaler& scaler = d.scaler;
  const Dataset sample = d.raw.subset(std::vector<Index>{
      0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584, 4181, 6765});

  // gradient elasticity vs central differences in raw units, per row
  double worst = 0.0;
  int checked = 0;
  const std::pair<const char*, const char*> targets[] = {{"drive_cost", "drive"},
                                                         {"walk_time", "walk"},
                                                         {"av_cost", "av"}};
  for (Task task : {Task::RP, Task::SP}) {
    for (const auto& [var, alt] : targets) {
      if (task == Task::RP && std::string(var) == "av_cost") continue;
      if (task == Task::RP && std::string(alt) == "av") continue;
      const ElasticityResult e = elasticity(*net, sample, scaler, {var, alt, task});
      const Index j = *sample.schema().feature_index(var);
      const Index a = *sample.schema().alternative_index(alt, task);
      for (const auto& r : e.rows) {
        const Vector x = sample.x(r.row);
        const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
        Vector xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const double dp = (net->predict(scaler.transform(xp, task), task)[a] -
                           net->predict(scaler.transform(xm, task), task)[a]) /
                          (2 * step);
        const double fd = dp * x[j] / r.probability;
        worst = std::max(worst, std::abs(fd - r.elasticity) / std::max(std::abs(r.elasticity), 1e-3));
        ++checked;
      }
    }
  }

  // curve simplex
  double simplex = 0.0;
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(2.0 + i);
  for (Task task : {Task::RP, Task::SP}) {
    const CurveTable t = prob_curve({{"net", net.get()}}, sample, scaler, {"drive_cost", grid, task, {}});
    for (double g : grid) {
      double total = 0.0;
      for (const auto& p : t.points)
        if (p.grid_value == g) total += p.mean_probability;
      simplex = std::max(simplex, std::abs(total - 1.0));
    }
  }

  // sign on linear data
  const Dataset lin = generate(mode_choice_dgp(DgpKind::LinearMnl), 3000, 3000, 61);
  const Scaler ls = fit_scaler(lin);
  const MnlSptModel mnl = fit_mnl_spt(ls.transform(lin));
  const double av = elasticity(mnl, lin, ls, {"av_cost", "av", Task::SP}).mean;
  const double drive = elasticity(mnl, lin, ls, {"drive_cost", "drive", Task::RP}).mean;

  return {checked > 0 && worst < 1e-6 && simplex < 1e-10 && av < 0.0 && drive < 0.0,
          fmt("%d row elasticities, max relative gap to finite differences %.2e; max |sum P - 1| "
              "%.1e; linear-data cost elasticities av %.3f, drive %.3f",
              checked, worst, simplex, av, drive)};
}

// ---------------------------------------------------------------- determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome compare_determinism() {
  const Json j = Json::parse(R"({
    "seed": 17,
    "data": {"synth": {"preset": "nonlinear", "n_rp": 600, "n_sp": 1200}},
    "model": "nl-c",
    "hyper": {"shared_depth": 2, "task_depth": 1, "width": 25, "n_iter": 300},
    "search": {"space": {"preset": "desk", "n_iter": 300}, "draws": 3, "top_k": 2, "workers": 2},
    "ties": [{"feature": "walk_time", "alternative": "walk"},
             {"feature": "transit_cost", "alternative": "transit"},
             {"feature": "drive_cost", "alternative": "drive"}]
  })");
  const ExperimentConfig config = parse_config(j);
  const fs::path root = fs::temp_directory_path() / "mtlchoice_acceptance_compare";
  fs::remove_all(root);
  std::ostringstream log;
  const auto first = run_command("compare", config, {root / "a"}, log);
  const auto second = run_command("compare", config, {root / "b"}, log);
  bool same = first.size() == second.size() && !first.empty();
  std::string files;
  for (std::size_t i = 0; same && i < first.size(); ++i) {
    same = slurp(first[i]) == slurp(second[i]) && !slurp(first[i]).empty();
    files += (i ? ", " : "") + first[i].filename().string();
  }
  fs::remove_all(root);
  return {same, "byte-identical reruns of " + files};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail
              << std::endl;
  };
  report(1, "gradient correctness", gradient_correctness);
  report(2, "MNL recovery", mnl_recovery);
  report(3, "NL scale recovery", nl_scale_recovery);
  report(4, "theta non-identification", theta_non_identification);
  report(5, "MTLDNN decoupling", decoupling);
  report(6, "lambda3 response", lambda3_response);

  const NonlinearData data = nonlinear_data();
  std::shared_ptr<const MtldnnModel> best;
  report(7, "misspecification gap", [&] {
    GapResult g = misspecification_gap(data);
    best = g.best;
    return g.outcome;
  });
  report(8, "architecture sweep", [&] { return architecture_sweep(data); });
  report(9, "interpretation consistency", [&] {
    if (!best) return Outcome{false, "no searched model available"};
    return interpretation(best, data);
  });
  report(10, "compare determinism", compare_determinism);

  std::cout << (failures == 0 ? "all 10 criteria passed" : fmt("%d of 10 criteria failed", failures))
            << std::endl;
  return failures == 0 ? 0 : 1;
}
