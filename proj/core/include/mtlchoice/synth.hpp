#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mtlchoice/dataset.hpp"

namespace mtlchoice {

enum class DgpKind { LinearMnl, ScaledNl, Nonlinear };

std::string_view to_string(DgpKind kind);
std::optional<DgpKind> parse_dgp_kind(std::string_view text);

/// Ground-truth random-utility model for simulated RP/SP surveys.
///
/// Raw features are drawn as location + spread * z with z ~ N(0, 1); SP-only
/// features are zero on RP rows. Utilities use the standard-normal draws z:
///   V_k = beta[k, 0] + beta[k, 1:] . z  (+ nonlinear terms for Nonlinear)
/// where the Nonlinear kind adds, per alternative k,
///   nonlinear[k, 0] z_0^2 + nonlinear[k, 1] z_1^2 + nonlinear[k, 2] z_0 z_1
/// over the first two features. RP errors are Gumbel(0, 1); SP errors are
/// theta * Gumbel(0, 1) for ScaledNl (so Var_rp / Var_sp = 1 / theta^2) and
/// Gumbel(0, 1) otherwise. The chosen alternative is the utility argmax.
struct DgpSpec {
  DgpKind kind = DgpKind::LinearMnl;
  FeatureSchema schema;
  Matrix beta_rp;  // K_r x (d + 1), intercept first
  Matrix beta_sp;  // K_s x (d + 1)
  double theta = 1.0;
  /// (alternative, column) positions where beta_sp is overwritten by beta_rp.
  std::vector<std::pair<Index, Index>> shared_map;
  Vector location;   // d, default 0
  Vector spread;     // d, default 1
  Matrix nonlinear_rp;  // K_r x 3 (Nonlinear only)
  Matrix nonlinear_sp;  // K_s x 3
  std::uint64_t noise_seed = 0;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
  /// beta_sp with the shared_map positions copied from beta_rp.
  Matrix effective_beta_sp() const;
  double sp_noise_scale() const { return kind == DgpKind::ScaledNl ? theta : 1.0; }
};

Dataset generate(const DgpSpec& spec, Index n_rp, Index n_sp, std::uint64_t seed);

/// Systematic utilities for a raw feature vector.
Vector true_utilities(const DgpSpec& spec, const Vector& raw_x, Task task);

/// Closed-form logit probabilities implied by `spec` for one raw row.
Vector true_probabilities(const DgpSpec& spec, const Vector& raw_x, Task task);

/// Travel-mode schema: four RP modes (walk, transit, drive, rideshare), SP adds av.
FeatureSchema mode_choice_schema();

/// Preset over mode_choice_schema with documented coefficients.
DgpSpec mode_choice_dgp(DgpKind kind, double theta = 2.0);

/// Two standard-normal features, three alternatives in both tasks.
/// Alternative 0 carries (1.0, -0.5), alternative 1 carries (-0.5, 1.0),
/// alternative 2 is the zero reference; intercepts are zero.
DgpSpec two_feature_linear_dgp();

}  // namespace mtlchoice
