#include "dicelab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace dicelab {

namespace {

using nlohmann::ordered_json;

std::vector<std::vector<int>> positive_adjacency(const Eigen::MatrixXd& m) {
    std::vector<std::vector<int>> adj(static_cast<size_t>(m.rows()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) > 0.0) adj[static_cast<size_t>(i)].push_back(j);
    return adj;
}

std::vector<bool> reachable_from(const std::vector<std::vector<int>>& adj,
                                 const std::vector<int>& sources) {
    std::vector<bool> seen(adj.size(), false);
    std::vector<int> stack(sources);
    for (int s : sources) seen[static_cast<size_t>(s)] = true;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[static_cast<size_t>(u)]) {
            if (!seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

/// Kosaraju strongly-connected components, iterative. Returns component id
/// per node; ids are assigned in reverse topological order.
std::vector<int> strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                               int* num_components) {
    const int n = static_cast<int>(adj.size());
    std::vector<std::vector<int>> radj(static_cast<size_t>(n));
    for (int u = 0; u < n; ++u)
        for (int v : adj[static_cast<size_t>(u)]) radj[static_cast<size_t>(v)].push_back(u);

    std::vector<int> order;
    order.reserve(static_cast<size_t>(n));
    std::vector<bool> seen(static_cast<size_t>(n), false);
    for (int start = 0; start < n; ++start) {
        if (seen[static_cast<size_t>(start)]) continue;
        // Explicit stack with child cursor to emit the post-order.
        std::vector<std::pair<int, size_t>> stack{{start, 0}};
        seen[static_cast<size_t>(start)] = true;
        while (!stack.empty()) {
            auto& [u, cursor] = stack.back();
            if (cursor < adj[static_cast<size_t>(u)].size()) {
                const int v = adj[static_cast<size_t>(u)][cursor++];
                if (!seen[static_cast<size_t>(v)]) {
                    seen[static_cast<size_t>(v)] = true;
                    stack.push_back({v, 0});
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }

    std::vector<int> comp(static_cast<size_t>(n), -1);
    int c = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[static_cast<size_t>(*it)] != -1) continue;
        std::vector<int> stack{*it};
        comp[static_cast<size_t>(*it)] = c;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : radj[static_cast<size_t>(u)]) {
                if (comp[static_cast<size_t>(v)] == -1) {
                    comp[static_cast<size_t>(v)] = c;
                    stack.push_back(v);
                }
            }
        }
        ++c;
    }
    *num_components = c;
    return comp;
}

std::vector<int> support_states(const Eigen::VectorXd& v) {
    std::vector<int> out;
    for (int i = 0; i < v.size(); ++i)
        if (v(i) > 0.0) out.push_back(i);
    return out;
}

std::string join_states(const std::vector<int>& states) {
    std::ostringstream os;
    for (size_t i = 0; i < states.size(); ++i) {
        if (i) os << ", ";
        os << states[i];
    }
    return os.str();
}

Eigen::VectorXd r_pi_vector(const TabularMdp& mdp, const Policy& policy) {
    return (mdp.reward.array() * policy.probs.array()).rowwise().sum();
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const ordered_json& j) {
    Eigen::VectorXd v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<size_t>(i)).get<double>();
    return v;
}

}  // namespace

Eigen::VectorXd discounted_stationary(const TabularMdp& mdp, const Policy& policy) {
    detail::check_policy_match(mdp, policy);
    const MarkovChain chain = build_chain(mdp, policy);
    const double gamma = mdp.discount;
    const int n = mdp.num_states;
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(n, n) - gamma * chain.p_pi.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::VectorXd x = lu.solve(mdp.initial_dist);
    // The spectral radius of gamma P_pi is below 1, so a large residual can
    // only mean the inputs were malformed.
    if ((system * x - mdp.initial_dist).norm() > 1e-8)
        throw NumericalError("discounted_stationary: linear solve failed");
    return (1.0 - gamma) * x;
}

Eigen::VectorXd undiscounted_stationary(const TabularMdp& mdp, const Policy& policy) {
    detail::check_policy_match(mdp, policy);
    const MarkovChain chain = build_chain(mdp, policy);
    const int n = mdp.num_states;

    const auto adj = positive_adjacency(chain.restart_chain);
    const auto reachable = reachable_from(adj, support_states(mdp.initial_dist));
    std::vector<int> keep;
    for (int s = 0; s < n; ++s)
        if (reachable[static_cast<size_t>(s)]) keep.push_back(s);
    const int m = static_cast<int>(keep.size());

    // Irreducibility on the reachable support: exactly one closed
    // communicating class, otherwise the stationary distribution is not
    // unique and the model is rejected.
    std::vector<std::vector<int>> sub_adj(static_cast<size_t>(m));
    std::vector<int> local(static_cast<size_t>(n), -1);
    for (int i = 0; i < m; ++i) local[static_cast<size_t>(keep[static_cast<size_t>(i)])] = i;
    for (int i = 0; i < m; ++i)
        for (int v : adj[static_cast<size_t>(keep[static_cast<size_t>(i)])])
            if (local[static_cast<size_t>(v)] >= 0)
                sub_adj[static_cast<size_t>(i)].push_back(local[static_cast<size_t>(v)]);
    int num_comps = 0;
    const auto comp = strongly_connected_components(sub_adj, &num_comps);
    std::vector<bool> closed(static_cast<size_t>(num_comps), true);
    for (int i = 0; i < m; ++i)
        for (int v : sub_adj[static_cast<size_t>(i)])
            if (comp[static_cast<size_t>(v)] != comp[static_cast<size_t>(i)])
                closed[static_cast<size_t>(comp[static_cast<size_t>(i)])] = false;
    std::vector<int> closed_states;
    int num_closed = 0;
    for (int c = 0; c < num_comps; ++c) {
        if (!closed[static_cast<size_t>(c)]) continue;
        ++num_closed;
        for (int i = 0; i < m; ++i)
            if (comp[static_cast<size_t>(i)] == c)
                closed_states.push_back(keep[static_cast<size_t>(i)]);
    }
    if (num_closed != 1) {
        std::sort(closed_states.begin(), closed_states.end());
        throw ModelError(
            "undiscounted_stationary: restart chain is reducible; closed classes cover states {" +
            join_states(closed_states) + "}");
    }

    // Stationary distribution of the reachable sub-chain via the stacked
    // system [R^T - I; 1^T] d = [0; 1].
    Eigen::MatrixXd sub(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            sub(i, j) = chain.restart_chain(keep[static_cast<size_t>(i)],
                                            keep[static_cast<size_t>(j)]);
    Eigen::MatrixXd stacked(m + 1, m);
    stacked.topRows(m) = sub.transpose() - Eigen::MatrixXd::Identity(m, m);
    stacked.row(m).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs(m) = 1.0;
    const Eigen::VectorXd d_sub = stacked.colPivHouseholderQr().solve(rhs);
    if ((stacked * d_sub - rhs).norm() > 1e-9)
        throw NumericalError("undiscounted_stationary: stationary solve failed");

    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
        d(keep[static_cast<size_t>(i)]) = std::max(0.0, d_sub(i));
    return d;
}

std::pair<double, double> expected_quantities(const TabularMdp& mdp, const Policy& policy) {
    detail::check_policy_match(mdp, policy);
    const MarkovChain chain = build_chain(mdp, policy);
    const int n = mdp.num_states;
    const double gamma = mdp.discount;

    const auto adj = positive_adjacency(chain.p_pi);
    const auto reachable = reachable_from(adj, support_states(mdp.initial_dist));
    std::vector<int> keep;
    for (int s = 0; s < n; ++s)
        if (reachable[static_cast<size_t>(s)]) keep.push_back(s);
    const int m = static_cast<int>(keep.size());

    // Assumption check: every reachable state must reach termination, else
    // E[T] is infinite. Backward reachability from the terminating states.
    std::vector<std::vector<int>> radj(static_cast<size_t>(n));
    for (int u = 0; u < n; ++u)
        for (int v : adj[static_cast<size_t>(u)]) radj[static_cast<size_t>(v)].push_back(u);
    std::vector<int> term_sources;
    for (int s = 0; s < n; ++s)
        if (chain.term_prob(s) > 0.0) term_sources.push_back(s);
    const auto can_terminate = reachable_from(radj, term_sources);
    std::vector<int> stuck;
    for (int s : keep)
        if (!can_terminate[static_cast<size_t>(s)]) stuck.push_back(s);
    if (!stuck.empty())
        throw ModelError(
            "expected_quantities: termination unreachable from states {" + join_states(stuck) +
            "}; expected trajectory length is infinite");

    Eigen::MatrixXd p_sub(m, m);
    Eigen::VectorXd term_sub(m), nu_sub(m);
    for (int i = 0; i < m; ++i) {
        term_sub(i) = chain.term_prob(keep[static_cast<size_t>(i)]);
        nu_sub(i) = mdp.initial_dist(keep[static_cast<size_t>(i)]);
        for (int j = 0; j < m; ++j)
            p_sub(i, j) = chain.p_pi(keep[static_cast<size_t>(i)], keep[static_cast<size_t>(j)]);
    }

    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd h =
        Eigen::PartialPivLU<Eigen::MatrixXd>(eye - p_sub).solve(Eigen::VectorXd::Ones(m));
    const Eigen::VectorXd z =
        Eigen::PartialPivLU<Eigen::MatrixXd>(eye - gamma * p_sub).solve(gamma * term_sub);
    return {nu_sub.dot(h), nu_sub.dot(z)};
}

Eigen::MatrixXd q_values(const TabularMdp& mdp, const Policy& policy) {
    detail::check_policy_match(mdp, policy);
    const MarkovChain chain = build_chain(mdp, policy);
    const int n = mdp.num_states;
    const double gamma = mdp.discount;
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(n, n) - gamma * chain.p_pi;
    const Eigen::VectorXd v =
        Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(r_pi_vector(mdp, policy));
    Eigen::MatrixXd q(n, mdp.num_actions);
    for (int a = 0; a < mdp.num_actions; ++a)
        q.col(a) = mdp.reward.col(a) + gamma * (mdp.transition[static_cast<size_t>(a)] * v);
    return q;
}

double j_pi(const TabularMdp& mdp, const Policy& policy) {
    return discounted_stationary(mdp, policy).dot(r_pi_vector(mdp, policy));
}

OracleReport compute_report(const TabularMdp& mdp, const Policy& target,
                            const Policy& behaviour) {
    OracleReport report;
    report.d_pi_gamma = discounted_stationary(mdp, target);
    report.d_mu = undiscounted_stationary(mdp, behaviour);
    const auto [len_mu, gamma_mass_mu] = expected_quantities(mdp, behaviour);
    (void)gamma_mass_mu;
    report.expected_len_mu = len_mu;
    const auto [len_pi, gamma_mass_pi] = expected_quantities(mdp, target);
    (void)len_pi;
    report.gamma_mass_pi = gamma_mass_pi;
    report.q_pi = q_values(mdp, target);
    report.j_pi = report.d_pi_gamma.dot(r_pi_vector(mdp, target));

    report.density_ratio = Eigen::VectorXd::Zero(mdp.num_states);
    std::vector<int> uncovered;
    for (int s = 0; s < mdp.num_states; ++s) {
        if (report.d_mu(s) > 0.0) {
            report.density_ratio(s) = report.d_pi_gamma(s) / report.d_mu(s);
        } else if (report.d_pi_gamma(s) > 1e-12) {
            uncovered.push_back(s);
        }
    }
    if (!uncovered.empty())
        throw ModelError("compute_report: behaviour does not cover target occupancy at states {" +
                         join_states(uncovered) + "}");
    return report;
}

FixedPointSystem assemble_fixed_point(const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& d_mu,
                                      const Eigen::VectorXd& density_ratio,
                                      double expected_len_mu, double gamma,
                                      double lambda1, double lambda2, double H) {
    if (features.rows() != d_mu.size() || features.rows() != density_ratio.size())
        throw InputError("assemble_fixed_point: feature/vector size mismatch");
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw InputError("assemble_fixed_point: regularizers must be nonnegative");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw InputError("assemble_fixed_point: gamma must lie in (0,1)");
    if (expected_len_mu < 1.0 || H <= 0.0)
        throw InputError("assemble_fixed_point: expected length and H must be positive");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(features);
    qr.setThreshold(1e-10);
    if (qr.rank() < features.cols())
        throw InputError("assemble_fixed_point: features are rank-deficient (rank " +
                         std::to_string(qr.rank()) + " of " + std::to_string(features.cols()) +
                         ")");

    const int d = static_cast<int>(features.cols());
    FixedPointSystem sys;
    sys.features = features;
    sys.H = H;
    sys.lambda1 = lambda1;
    sys.lambda2 = lambda2;

    const Eigen::MatrixXd weighted = d_mu.asDiagonal() * features;  // D_mu Phi
    const double scale = lambda2 * H * (1.0 - gamma);
    sys.G = Eigen::MatrixXd::Zero(d + 1, d + 1);
    sys.G.topLeftCorner(d, d) =
        -features.transpose() * weighted - lambda1 * Eigen::MatrixXd::Identity(d, d);
    sys.G.topRightCorner(d, 1) = -scale * (features.transpose() * d_mu);
    sys.G.bottomLeftCorner(1, d) = scale * (d_mu.transpose() * features);
    sys.G(d, d) = -lambda2;

    sys.g = Eigen::VectorXd::Zero(d + 1);
    sys.g.head(d) =
        (weighted.transpose() * density_ratio) / ((1.0 - gamma) * expected_len_mu);
    sys.g(d) = -lambda2;

    const auto solve_failure = [&]() -> NumericalError {
        const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(sys.G).eigenvalues();
        std::ostringstream msg;
        msg << "assemble_fixed_point: singular G; eigenvalues:";
        for (int i = 0; i < eigs.size(); ++i)
            msg << " " << eigs(i).real() << (eigs(i).imag() >= 0 ? "+" : "") << eigs(i).imag()
                << "i";
        return NumericalError(msg.str());
    };

    if (lambda2 > 0.0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.G);
        if (!lu.isInvertible()) throw solve_failure();
        sys.solution = lu.solve(-sys.g);
    } else {
        // With lambda2 = 0 the eta row of G is zero and eta never moves from
        // its initialization; solve the theta block alone and pin eta = 0.
        Eigen::FullPivLU<Eigen::MatrixXd> lu(-sys.G.topLeftCorner(d, d));
        if (!lu.isInvertible()) throw solve_failure();
        sys.solution = Eigen::VectorXd::Zero(d + 1);
        sys.solution.head(d) = lu.solve(sys.g.head(d));
    }
    return sys;
}

HurwitzCheck check_hurwitz(const Eigen::MatrixXd& G) {
    if (G.rows() != G.cols()) throw InputError("check_hurwitz: matrix must be square");
    HurwitzCheck out;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(G, /*computeEigenvectors=*/false);
    out.eigenvalues = solver.eigenvalues();
    out.max_real_part = out.eigenvalues.real().maxCoeff();
    out.is_hurwitz = out.max_real_part < -1e-12;
    return out;
}

Eigen::VectorXd recurrence_times(const Eigen::MatrixXd& chain) {
    if (chain.rows() != chain.cols()) throw InputError("recurrence_times: matrix must be square");
    const int n = static_cast<int>(chain.rows());
    const auto adj = positive_adjacency(chain);
    int num_comps = 0;
    const auto comp = strongly_connected_components(adj, &num_comps);
    std::vector<bool> closed(static_cast<size_t>(num_comps), true);
    for (int u = 0; u < n; ++u)
        for (int v : adj[static_cast<size_t>(u)])
            if (comp[static_cast<size_t>(v)] != comp[static_cast<size_t>(u)])
                closed[static_cast<size_t>(comp[static_cast<size_t>(u)])] = false;

    Eigen::VectorXd tau =
        Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (int target = 0; target < n; ++target) {
        if (!closed[static_cast<size_t>(comp[static_cast<size_t>(target)])]) continue;
        std::vector<int> members;
        for (int s = 0; s < n; ++s)
            if (comp[static_cast<size_t>(s)] == comp[static_cast<size_t>(target)])
                members.push_back(s);
        const int m = static_cast<int>(members.size());
        std::vector<int> local(static_cast<size_t>(n), -1);
        for (int i = 0; i < m; ++i) local[static_cast<size_t>(members[static_cast<size_t>(i)])] = i;

        // Hitting times h(x) = 1 + sum_{x' != target} R(x,x') h(x') inside
        // the closed class; the class is invariant so rows stay within it.
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                if (members[static_cast<size_t>(j)] == target) continue;
                system(i, j) -= chain(members[static_cast<size_t>(i)],
                                      members[static_cast<size_t>(j)]);
            }
        }
        const Eigen::VectorXd h =
            Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(Eigen::VectorXd::Ones(m));
        tau(target) = h(local[static_cast<size_t>(target)]);
    }
    return tau;
}

std::string report_to_json(const OracleReport& report) {
    ordered_json j;
    j["d_pi_gamma"] = vector_to_json(report.d_pi_gamma);
    j["d_mu"] = vector_to_json(report.d_mu);
    j["density_ratio"] = vector_to_json(report.density_ratio);
    j["j_pi"] = report.j_pi;
    j["expected_len_mu"] = report.expected_len_mu;
    j["gamma_mass_pi"] = report.gamma_mass_pi;
    ordered_json q = ordered_json::array();
    for (int s = 0; s < report.q_pi.rows(); ++s) {
        ordered_json row = ordered_json::array();
        for (int a = 0; a < report.q_pi.cols(); ++a) row.push_back(report.q_pi(s, a));
        q.push_back(row);
    }
    j["q_pi"] = q;
    return j.dump(2) + "\n";
}

OracleReport report_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("oracle report: " + std::string(e.what()));
    }
    OracleReport report;
    report.d_pi_gamma = vector_from_json(j.at("d_pi_gamma"));
    report.d_mu = vector_from_json(j.at("d_mu"));
    report.density_ratio = vector_from_json(j.at("density_ratio"));
    report.j_pi = j.at("j_pi").get<double>();
    report.expected_len_mu = j.at("expected_len_mu").get<double>();
    report.gamma_mass_pi = j.at("gamma_mass_pi").get<double>();
    const auto& q = j.at("q_pi");
    const int rows = static_cast<int>(q.size());
    const int cols = rows > 0 ? static_cast<int>(q.at(0).size()) : 0;
    report.q_pi = Eigen::MatrixXd(rows, cols);
    for (int s = 0; s < rows; ++s)
        for (int a = 0; a < cols; ++a)
            report.q_pi(s, a) = q.at(static_cast<size_t>(s)).at(static_cast<size_t>(a)).get<double>();
    return report;
}

void save_report_json(const OracleReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write oracle report: " + path);
    out << report_to_json(report);
}

OracleReport load_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open oracle report: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

}  // namespace dicelab
