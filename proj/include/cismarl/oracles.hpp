#pragma once

// Brute-force solvers and equilibrium checks. Everything here works directly
// on the game tables with value iteration and never calls the sweeps it is
// used to verify. certify_fixed_point is the one caller of evaluate_policy,
// which it exists to cross-check.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cismarl/dual_iteration.hpp"
#include "cismarl/game.hpp"
#include "cismarl/safety_iteration.hpp"

namespace cismarl {

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeGuard : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint-action spaces larger than this per state are refused.
inline constexpr std::size_t kJointActionCap = 1'000'000;

inline constexpr double kCertificateTolerance = 1e-9;
inline constexpr double kOracleTolerance = 1e-12;

enum class CertificateKind { kNashSafety, kGneTask, kJointOptimumGap, kFixedPoint };

std::string_view to_string(CertificateKind kind);

/// Where a certificate found its worst violation. `agent` and `action` are
/// -1 for checks that are not per-agent.
struct Witness {
  StateId state = 0;
  long agent = -1;
  int action = -1;
};

struct Certificate {
  CertificateKind kind = CertificateKind::kNashSafety;
  bool passed = false;
  double tolerance = 0.0;
  double worst_violation = 0.0;
  std::optional<Witness> witness;
};

/// Result of applying a policy's self-consistency operator repeatedly.
struct FixedPointRun {
  ValueTable table;
  std::vector<double> residuals;  // residuals[k] = |T^(k+1) V0 - T^k V0|
};

/// Applies the operator from the zero table for up to `sweeps` sweeps,
/// stopping once the sup-norm change drops below `tol`. Never throws.
FixedPointRun iterate_operator(const Game& game, const JointPolicy& policy,
                               ValueKind kind, std::size_t sweeps, double tol);

/// As iterate_operator, but throws NonConvergence if the last residual is
/// still >= tol.
ValueTable iterative_fixed_point(const Game& game, const JointPolicy& policy,
                                 ValueKind kind, std::size_t sweeps,
                                 double tol);

struct JointOptimum {
  std::vector<JointActionId> policy;  // greedy joint action per state
  ValueTable vh;
  std::size_t sweeps = 0;
  std::size_t evaluations = 0;  // joint actions scored over all sweeps
};

/// Centralized optimum over the full joint action space:
/// V(x) = gamma_h * min(h(x), max_u V(f(x,u))). Throws SizeGuard.
JointOptimum joint_safety_optimum(const Game& game);

/// Best safety value agent `agent` can reach when everyone else follows
/// `policy`.
ValueTable best_response_safety(const Game& game, const JointPolicy& policy,
                                std::size_t agent);

/// Nash check of a converged safety iteration: no agent's best response beats
/// the joint safety value by more than `tol` anywhere.
Certificate certify_nash_safety(const Game& game,
                                const SafetyIterationResult& result,
                                double tol = kCertificateTolerance);

/// Generalized Nash check of a converged dual iteration inside the induced
/// game: no agent can raise the reward value by more than `tol` using only
/// actions whose successor stays in the safety policy's CIS.
Certificate certify_gne_task(const Game& game,
                             const DualIterationResult& result,
                             double tol = kCertificateTolerance);

struct InducedOptimum {
  StateSet cis;
  ValueTable v;  // zero outside `cis`
};

/// Optimal reward value of the induced game: states of the CIS of `vh`,
/// joint actions u with vh(f(x,u)) >= 0. Throws SizeGuard, and
/// std::invalid_argument if the CIS is empty.
InducedOptimum induced_joint_optimum(const Game& game, const ValueTable& vh);

/// Upper-bound check: values[x] <= bound[x] + tol on every state of `on`.
Certificate certify_upper_bound(const ValueTable& values,
                                const ValueTable& bound, const StateSet& on,
                                double tol = kCertificateTolerance);

/// Exact evaluation against the iterative oracle, both kinds.
Certificate certify_fixed_point(const Game& game, const JointPolicy& policy,
                                double tol = kCertificateTolerance);

}  // namespace cismarl
