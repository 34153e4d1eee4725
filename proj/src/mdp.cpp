#include "dicelab/mdp.hpp"

#include <cmath>
#include <span>
#include <sstream>

#include "dicelab/text.hpp"

namespace dicelab {

namespace {

bool nonnegative(const Eigen::MatrixXd& m) { return (m.array() >= 0.0).all(); }

}  // namespace

void TabularMdp::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw InputError("mdp: num_states and num_actions must be positive");
    if (static_cast<int>(transition.size()) != num_actions)
        throw InputError("mdp: transition must hold one matrix per action");
    for (int a = 0; a < num_actions; ++a) {
        const auto& p = transition[static_cast<size_t>(a)];
        if (p.rows() != num_states || p.cols() != num_states)
            throw InputError("mdp: transition matrix shape mismatch for action " +
                             std::to_string(a));
        if (!nonnegative(p)) throw InputError("mdp: negative transition probability");
    }
    if (termination.rows() != num_states || termination.cols() != num_actions)
        throw InputError("mdp: termination shape mismatch");
    if (reward.rows() != num_states || reward.cols() != num_actions)
        throw InputError("mdp: reward shape mismatch");
    if (initial_dist.size() != num_states) throw InputError("mdp: initial_dist size mismatch");
    if (!nonnegative(termination)) throw InputError("mdp: negative termination mass");
    if (!(initial_dist.array() >= 0.0).all())
        throw InputError("mdp: negative initial probability");
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            const double total =
                transition[static_cast<size_t>(a)].row(s).sum() + termination(s, a);
            if (std::abs(total - 1.0) > kProbTol) {
                std::ostringstream msg;
                msg << "mdp: transition row (s=" << s << ", a=" << a << ") sums to " << total;
                throw InputError(msg.str());
            }
        }
    }
    if (std::abs(initial_dist.sum() - 1.0) > kProbTol)
        throw InputError("mdp: initial_dist must sum to 1");
    if (!(discount > 0.0 && discount < 1.0))
        throw InputError("mdp: discount must lie strictly inside (0,1)");
}

void Policy::validate() const {
    if (probs.rows() <= 0 || probs.cols() <= 0) throw InputError("policy: empty table");
    if (!nonnegative(probs)) throw InputError("policy: negative probability");
    for (int s = 0; s < probs.rows(); ++s) {
        if (std::abs(probs.row(s).sum() - 1.0) > kProbTol)
            throw InputError("policy: row " + std::to_string(s) + " does not sum to 1");
    }
}

std::string Policy::hash() const {
    // Row-major traversal so the fingerprint is layout-independent.
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(probs.size()));
    for (int s = 0; s < probs.rows(); ++s)
        for (int a = 0; a < probs.cols(); ++a) flat.push_back(probs(s, a));
    return to_hex(fnv1a64(flat));
}

Policy uniform_policy(int num_states, int num_actions) {
    Policy p;
    p.probs = Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions);
    return p;
}

Policy mix_with_uniform(const Policy& base, double eps) {
    if (eps < 0.0 || eps > 1.0) throw InputError("mix_with_uniform: eps must be in [0,1]");
    Policy out;
    out.probs = (1.0 - eps) * base.probs.array() + eps / base.num_actions();
    return out;
}

Policy soften(const Policy& base, double temperature) {
    if (temperature <= 0.0) throw InputError("soften: temperature must be positive");
    if (temperature == 1.0) return base;
    Policy out;
    out.probs = base.probs.array().pow(1.0 / temperature);
    for (int s = 0; s < out.probs.rows(); ++s) {
        const double z = out.probs.row(s).sum();
        if (z <= 0.0) throw InputError("soften: zero row after powering");
        out.probs.row(s) /= z;
    }
    return out;
}

namespace detail {
void check_policy_match(const TabularMdp& mdp, const Policy& policy) {
    if (policy.num_states() != mdp.num_states || policy.num_actions() != mdp.num_actions)
        throw InputError("policy dimensions do not match mdp");
}
}  // namespace detail

MarkovChain build_chain(const TabularMdp& mdp, const Policy& policy) {
    detail::check_policy_match(mdp, policy);
    MarkovChain chain;
    chain.p_pi = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_states);
    chain.term_prob = Eigen::VectorXd::Zero(mdp.num_states);
    for (int a = 0; a < mdp.num_actions; ++a) {
        chain.p_pi += policy.probs.col(a).asDiagonal() * mdp.transition[static_cast<size_t>(a)];
        chain.term_prob += policy.probs.col(a).cwiseProduct(mdp.termination.col(a));
    }
    chain.restart_chain = chain.p_pi + chain.term_prob * mdp.initial_dist.transpose();
    return chain;
}

Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& policy,
                             std::uint64_t rng_seed, int max_len) {
    detail::check_policy_match(mdp, policy);
    if (max_len < 1) throw InputError("sample_trajectory: max_len must be >= 1");

    SplitMix64 rng(rng_seed);
    Trajectory traj;

    int state = sample_categorical(
        std::span<const double>(mdp.initial_dist.data(),
                                static_cast<size_t>(mdp.initial_dist.size())),
        rng.next_double());

    for (int t = 0; t < max_len; ++t) {
        const Eigen::VectorXd action_probs = policy.probs.row(state).transpose();
        const int action = sample_categorical(
            std::span<const double>(action_probs.data(),
                                    static_cast<size_t>(action_probs.size())),
            rng.next_double());

        // Next-state draw over [P(.|s,a), termination mass] in one walk. The
        // trailing interval belongs to termination; when the pair has no
        // termination mass, rounding gaps fall back to the last reachable
        // state instead.
        const auto& p = mdp.transition[static_cast<size_t>(action)];
        const double u = rng.next_double();
        double cum = 0.0;
        int next = kTerminal;
        int last_positive = kTerminal;
        bool drawn = false;
        for (int s2 = 0; s2 < mdp.num_states; ++s2) {
            if (p(state, s2) > 0.0) last_positive = s2;
            cum += p(state, s2);
            if (u < cum) {
                next = s2;
                drawn = true;
                break;
            }
        }
        if (!drawn && mdp.termination(state, action) <= 0.0) next = last_positive;

        traj.steps.push_back({state, action, mdp.reward(state, action), next});
        if (next == kTerminal) {
            traj.terminated = true;
            break;
        }
        state = next;
    }
    return traj;
}

}  // namespace dicelab
