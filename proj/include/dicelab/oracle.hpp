#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "dicelab/mdp.hpp"

namespace dicelab {

/// Exact ground-truth quantities for one (mdp, target, behaviour) triple,
/// computed by dense linear algebra. Conventions:
///  - d_pi_gamma is the discounted occupancy of the target policy; in
///    episodic tasks its total mass is 1 - gamma_mass_pi, not 1.
///  - d_mu is the stationary distribution of the behaviour restart chain
///    over ordinary states (termination folded into the restart move).
///  - density_ratio[s] = d_pi_gamma[s] / d_mu[s] where d_mu[s] > 0, else 0.
struct OracleReport {
    Eigen::VectorXd d_pi_gamma;
    Eigen::VectorXd d_mu;
    Eigen::VectorXd density_ratio;
    double j_pi = 0.0;
    double expected_len_mu = 0.0;
    double gamma_mass_pi = 0.0;
    Eigen::MatrixXd q_pi;  // (state, action)
};

/// d_pi_gamma = (1-gamma) (I - gamma P_pi^T)^{-1} nu, the closed form of the
/// discounted occupancy restricted to ordinary states.
Eigen::VectorXd discounted_stationary(const TabularMdp& mdp, const Policy& policy);

/// Unique d with d^T restart_chain = d^T on the support reachable from the
/// initial distribution. Throws ModelError naming the offending states when
/// the reachable restart chain has more than one closed communicating class.
Eigen::VectorXd undiscounted_stationary(const TabularMdp& mdp, const Policy& policy);

/// (E[T], E[gamma^T]) under the policy, from the hitting systems
/// h = 1 + P_pi h and z = gamma (term_prob + P_pi z). Throws ModelError when
/// some reachable state cannot reach termination (E[T] infinite).
std::pair<double, double> expected_quantities(const TabularMdp& mdp, const Policy& policy);

/// Exact q from the Bellman system q = r + gamma P Pi q.
Eigen::MatrixXd q_values(const TabularMdp& mdp, const Policy& policy);

/// J(pi) = sum_s d_pi_gamma(s) r_pi(s).
double j_pi(const TabularMdp& mdp, const Policy& policy);

OracleReport compute_report(const TabularMdp& mdp, const Policy& target,
                            const Policy& behaviour);

/// Assembled linear system of the incremental update's mean dynamics,
/// together with its fixed point -G^{-1} g. Layout of x = (theta, eta):
///   G = [ -Phi^T D_mu Phi - lambda1 I   -lambda2 H (1-gamma) Phi^T d_mu ]
///       [  lambda2 H (1-gamma) d_mu^T Phi            -lambda2           ]
///   g = [ Phi^T D_mu y / ((1-gamma) E_mu[T]) ,  -lambda2 ]
struct FixedPointSystem {
    Eigen::MatrixXd G;         // (d+1, d+1)
    Eigen::VectorXd g;         // (d+1)
    Eigen::VectorXd solution;  // (d+1), solves G x = -g
    Eigen::MatrixXd features;  // Phi, (state, d)
    double H = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    Eigen::VectorXd theta() const { return solution.head(solution.size() - 1); }
    double eta() const { return solution(solution.size() - 1); }
};

/// Builds G and g from oracle quantities and solves for the fixed point.
/// Requires full-column-rank features (rank-revealing QR, tolerance 1e-10).
/// With lambda2 = 0 the eta coordinate is inert (any value satisfies
/// G x = -g); the solution fixes it at 0, matching an incremental run whose
/// eta never moves from its initialization.
FixedPointSystem assemble_fixed_point(const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& d_mu,
                                      const Eigen::VectorXd& density_ratio,
                                      double expected_len_mu, double gamma,
                                      double lambda1, double lambda2, double H);

struct HurwitzCheck {
    bool is_hurwitz = false;
    Eigen::VectorXcd eigenvalues;
    double max_real_part = 0.0;
};

/// True iff every eigenvalue of G has real part below -1e-12.
HurwitzCheck check_hurwitz(const Eigen::MatrixXd& G);

/// Expected recurrence time E[tau_s^+(s)] of every state of a row-stochastic
/// chain, by per-state hitting-time solves; infinity (as +inf) for states
/// outside the closed class. Used by the Lemma-1 cross-check.
Eigen::VectorXd recurrence_times(const Eigen::MatrixXd& chain);

std::string report_to_json(const OracleReport& report);
OracleReport report_from_json(const std::string& text);
void save_report_json(const OracleReport& report, const std::string& path);
OracleReport load_report_json(const std::string& path);

}  // namespace dicelab
