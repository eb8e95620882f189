#include "dkf/excitation_diagnostics.hpp"

#include "dkf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dkf::diagnostics {
namespace {

Matrix normalized_outer(const Vector& phi) {
  return phi * phi.transpose() / (1.0 + phi.squaredNorm());
}

// Mean of per-replicate Gram matrices; lambda_min with a delta-method error
// along the eigenvector of the mean.
LambdaEstimate summarize(const std::vector<Matrix>& grams) {
  const auto mc = static_cast<int>(grams.size());
  Matrix mean = Matrix::Zero(grams.front().rows(), grams.front().cols());
  for (const auto& g : grams) mean += g;
  mean /= static_cast<double>(mc);

  Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(mean));
  const double norm = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  double value = es.eigenvalues()(0);
  const Vector u = es.eigenvectors().col(0);
  if (value < kRankFloor * norm) value = 0.0;

  LambdaEstimate est;
  est.value = std::min(value, 1.0);
  est.mc_samples = mc;
  if (mc > 1) {
    std::vector<double> q(grams.size());
    std::transform(grams.begin(), grams.end(), q.begin(),
                   [&](const Matrix& g) { return u.dot(g * u); });
    const double qmean = std::accumulate(q.begin(), q.end(), 0.0) / mc;
    double ss = 0.0;
    for (double x : q) ss += (x - qmean) * (x - qmean);
    est.std_error = std::sqrt(ss / (mc - 1)) / std::sqrt(static_cast<double>(mc));
  }
  return est;
}

void check_spec(const MonteCarloSpec& spec) {
  if (spec.mc < 1) throw ValidationError("excitation estimate requires mc >= 1");
  if (spec.h < 1) throw ValidationError("excitation estimate requires h >= 1");
}

Matrix future_gram(const signal::RegressorGenerator& frozen, const MonteCarloSpec& spec,
                   std::uint32_t sensor, int replicate) {
  auto gen = frozen.with_stream(RandomStream(
      spec.seed, {static_cast<std::uint64_t>(replicate), sensor, StreamRole::kDiagnostics,
                  spec.tag}));
  Matrix acc = Matrix::Zero(frozen.dim(), frozen.dim());
  for (int j = 0; j < spec.h; ++j) acc += normalized_outer(gen.step());
  return acc;
}

double trace_of(const diffusion::NetworkFilterState& net) {
  double t = 0.0;
  for (const auto& s : net.sensors) t += s.P.trace();
  return t;
}

Matrix sum_of_covariances(const diffusion::NetworkFilterState& net) {
  Matrix out = Matrix::Zero(net.sensors.front().P.rows(), net.sensors.front().P.cols());
  for (const auto& s : net.sensors) out += s.P;
  return out;
}

std::vector<Matrix> covariance_blocks(const diffusion::NetworkFilterState& net) {
  std::vector<Matrix> out;
  for (const auto& s : net.sensors) out.push_back(s.P);
  return out;
}

}  // namespace

Matrix normalized_gram(std::span<const Vector> samples) {
  if (samples.empty()) throw ValidationError("normalized_gram: no samples");
  Matrix acc = Matrix::Zero(samples.front().size(), samples.front().size());
  for (const auto& phi : samples) acc += normalized_outer(phi);
  return acc / static_cast<double>(samples.size());
}

LambdaEstimate estimate_lambda_single(const signal::RegressorGenerator& frozen,
                                      const MonteCarloSpec& spec, std::uint32_t sensor) {
  check_spec(spec);
  std::vector<Matrix> grams;
  grams.reserve(static_cast<std::size_t>(spec.mc));
  for (int r = 0; r < spec.mc; ++r) {
    grams.push_back(future_gram(frozen, spec, sensor, r) / (spec.h + 1.0));
  }
  return summarize(grams);
}

LambdaEstimate estimate_lambda_network(std::span<const signal::RegressorGenerator> frozen,
                                       const MonteCarloSpec& spec) {
  check_spec(spec);
  if (frozen.empty()) throw ValidationError("network excitation: no sensors");
  const double norm = static_cast<double>(frozen.size()) * (spec.h + 1.0);
  std::vector<Matrix> grams;
  grams.reserve(static_cast<std::size_t>(spec.mc));
  for (int r = 0; r < spec.mc; ++r) {
    Matrix acc = Matrix::Zero(frozen.front().dim(), frozen.front().dim());
    for (std::size_t i = 0; i < frozen.size(); ++i) {
      acc += future_gram(frozen[i], spec, static_cast<std::uint32_t>(i), r);
    }
    grams.push_back(acc / norm);
  }
  return summarize(grams);
}

S0Diagnostic s0_decay_fit(const std::vector<std::vector<double>>& replications, int max_gap) {
  if (replications.empty()) throw ValidationError("s0_decay_fit: no replications");
  std::size_t len = replications.front().size();
  for (const auto& rep : replications) {
    len = std::min(len, rep.size());
    for (double a : rep) {
      if (!(a >= 0.0 && a <= 1.0)) {
        throw ValidationError("s0_decay_fit: sample outside [0, 1]");
      }
    }
  }
  if (len < 2) throw ValidationError("s0_decay_fit: need at least two samples per sequence");
  const int top = std::min<int>(max_gap, static_cast<int>(len) - 1);
  if (top < 1) throw ValidationError("s0_decay_fit: max_gap must be >= 1");

  S0Diagnostic out;
  std::vector<double> xs, ys;
  for (int g = 1; g <= top; ++g) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& rep : replications) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(g) <= len; ++i) {
        double prod = 1.0;
        for (int j = 0; j < g; ++j) prod *= 1.0 - rep[i + static_cast<std::size_t>(j)];
        total += prod;
        ++count;
      }
    }
    const double mean = total / static_cast<double>(count);
    out.gaps.push_back(g);
    out.mean_products.push_back(mean);
    if (mean > 0.0) {
      xs.push_back(g);
      ys.push_back(std::log(mean));
    }
  }

  if (xs.size() < 2) {
    // Products vanish immediately: decay faster than any geometric rate we can fit.
    out.lambda_hat = xs.empty() ? 0.0 : std::exp(ys.front());
    out.M_hat = 1.0;
  } else {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    out.lambda_hat = std::exp(slope);
    out.M_hat = std::exp(my - slope * mx);
  }
  out.no_empirical_decay = out.lambda_hat >= 1.0 - 1e-3;
  return out;
}

TraceRecursionReport trace_recursion_report(const diffusion::Trajectory& traj, int h,
                                            int diameter, double a_min) {
  if (h < 1) throw ValidationError("trace recursion: h must be >= 1");
  if (diameter < 1) throw ValidationError("trace recursion: diameter must be >= 1");
  const int h_prime = h + diameter;
  const auto K = static_cast<int>(traj.length());
  if (K < 2 * h_prime) {
    throw ValidationError("trace recursion: trajectory of " + std::to_string(K) +
                          " steps is shorter than 2h' = " + std::to_string(2 * h_prime));
  }
  const auto& sensors = traj.initial.sensors;
  const auto n = static_cast<double>(sensors.size());
  const Matrix& Q = sensors.front().Q;
  double r_sum = 0.0;
  for (const auto& s : sensors) r_sum += s.r + 1.0;

  TraceRecursionReport rep;
  rep.h = h;
  rep.diameter = diameter;
  rep.h_prime = h_prime;
  rep.a_min = a_min;
  rep.d = 1.5 * n * h * (h_prime + 1) * Q.trace();

  // T_s = sum_{k=(s-1)h'+D}^{sh'-1} Tr(P_{k+1}), s >= 1.
  auto block_trace = [&](int s) {
    double t = 0.0;
    for (int k = (s - 1) * h_prime + diameter; k <= s * h_prime - 1; ++k) {
      t += trace_of(traj.state_at(static_cast<std::size_t>(k + 1)));
    }
    return t;
  };
  rep.first_block = block_trace(1);

  const int blocks = K / h_prime;
  for (int s = 1; s + 1 <= blocks; ++s) {
    TraceBlock blk;
    blk.s = s;
    blk.T_s = block_trace(s);
    blk.T_next = block_trace(s + 1);

    const Matrix S =
        sum_of_covariances(traj.state_at(static_cast<std::size_t>(s * h_prime))) + h_prime * Q;
    Matrix excitation = Matrix::Zero(S.rows(), S.cols());
    for (int k = s * h_prime + diameter; k <= (s + 1) * h_prime - 1; ++k) {
      for (const auto& obs : traj.steps[static_cast<std::size_t>(k)].obs.sensors) {
        excitation += normalized_outer(obs.phi);
      }
    }
    blk.c1 = (S * S * excitation).trace();
    blk.c2 = r_sum * (1.0 + linalg::max_eigenvalue(S)) * S.trace();
    blk.b = a_min * a_min * blk.c1 / (n * h * blk.c2);
    blk.bound = (1.0 - blk.b) * blk.T_s + rep.d;
    blk.violated = blk.T_next > blk.bound * (1.0 + 1e-8);
    rep.worst_ratio = std::max(rep.worst_ratio, blk.T_next / blk.bound);
    if (blk.violated) ++rep.violations;
    rep.blocks.push_back(blk);
  }
  return rep;
}

Matrix mixing_difference(const graph::AdjacencyMatrix& adj, std::span<const Matrix> Q) {
  const std::size_t n = adj.size();
  if (Q.size() != n) throw DimensionError("mixing inequality: need one Q_i per sensor");
  const Eigen::Index m = Q.front().rows();
  std::vector<Matrix> blocks(Q.begin(), Q.end());
  std::vector<Matrix> mixed(n, Matrix::Zero(m, m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (adj(j, i) != 0.0) mixed[i] += adj(j, i) * Q[j];
    }
  }
  const Matrix A_m = graph::kron_expand(adj, static_cast<int>(m));
  return linalg::block_diagonal(mixed) -
         A_m.transpose() * linalg::block_diagonal(blocks) * A_m;
}

InequalityCheck check_mixing(const graph::AdjacencyMatrix& adj, std::span<const Matrix> Q) {
  for (const auto& q : Q) {
    if (q.rows() != q.cols() || !linalg::is_symmetric(q, 1e-12) ||
        !(linalg::min_eigenvalue(q) > 0.0)) {
      throw ValidationError("mixing inequality: every Q_i must be symmetric positive definite");
    }
  }
  const Matrix diff = mixing_difference(adj, Q);
  double scale = 1.0;
  for (const auto& q : Q) scale = std::max(scale, linalg::max_eigenvalue(q));
  return {linalg::min_eigenvalue(diff), scale};
}

SandwichCheck check_sandwich(const graph::AdjacencyMatrix& adj,
                           std::span<const Matrix> P_bar, std::span<const Matrix> P_next) {
  const std::size_t n = adj.size();
  if (P_bar.size() != n || P_next.size() != n) {
    throw DimensionError("sandwich inequality: need one block per sensor");
  }
  const Eigen::Index m = P_bar.front().rows();
  const Matrix A_m = graph::kron_expand(adj, static_cast<int>(m));
  const Matrix Pb = linalg::block_diagonal({P_bar.begin(), P_bar.end()});
  const Matrix Pn = linalg::block_diagonal({P_next.begin(), P_next.end()});
  const Matrix Pb_inv = linalg::spd_inverse(Pb);
  const Matrix Pn_inv = linalg::spd_inverse(Pn);

  SandwichCheck out;
  const Matrix info_diff = Pn_inv - A_m.transpose() * Pb_inv * A_m;
  out.information = {linalg::min_eigenvalue(info_diff),
                     std::max({1.0, linalg::max_eigenvalue(Pn_inv),
                               linalg::max_eigenvalue(Pb_inv)})};
  const Matrix cov_diff = Pb - A_m * Pn * A_m.transpose();
  out.covariance = {linalg::min_eigenvalue(cov_diff),
                    std::max({1.0, linalg::max_eigenvalue(Pb), linalg::max_eigenvalue(Pn)})};
  return out;
}

SandwichCheck check_sandwich(const diffusion::Trajectory& traj, std::size_t step) {
  const auto& st = traj.steps.at(step);
  std::vector<Matrix> P_bar;
  for (const auto& a : st.adapted) P_bar.push_back(a.P_bar);
  return check_sandwich(*traj.initial.adjacency, P_bar, covariance_blocks(st.after));
}

StepOperators step_operators(const diffusion::Trajectory& traj, std::size_t step) {
  const auto& st = traj.steps.at(step);
  const auto& before = traj.state_at(step);
  const std::size_t n = before.size();
  const Eigen::Index m = before.sensors.front().theta_hat.size();
  const Eigen::Index mn = m * static_cast<Eigen::Index>(n);

  std::vector<Matrix> a_blocks, q_blocks, p_bar_blocks;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& L = st.adapted[i].gain;
    const auto& sensor = before.sensors[i];
    a_blocks.push_back(L * st.obs.sensors[i].phi.transpose());
    q_blocks.push_back(sensor.r * L * L.transpose() + sensor.Q);
    p_bar_blocks.push_back(st.adapted[i].P_bar);
  }
  StepOperators op;
  op.P_k = diffusion::stacked_covariance(before);
  op.P_next = diffusion::stacked_covariance(st.after);
  op.P_bar = linalg::block_diagonal(p_bar_blocks);
  op.Q_k = linalg::block_diagonal(q_blocks);
  const Matrix A_k = linalg::block_diagonal(a_blocks);
  const Matrix A_m = graph::kron_expand(*traj.initial.adjacency, static_cast<int>(m));
  op.transition = op.P_next * A_m.transpose() * linalg::spd_inverse(op.P_bar) *
                  (Matrix::Identity(mn, mn) - A_k);
  const double growth = linalg::spectral_norm(linalg::spd_inverse(op.Q_k) * op.P_bar);
  op.contraction = 1.0 - 1.0 / (1.0 + growth);
  return op;
}

ProductBoundCheck check_product_bound(const diffusion::Trajectory& traj, std::size_t s,
                                      std::size_t t) {
  if (!(t > s) || t > traj.length()) {
    throw ValidationError("product bound: window must satisfy s < t <= length");
  }
  const Eigen::Index mn = diffusion::stacked_covariance(traj.initial).rows();
  Matrix product = Matrix::Identity(mn, mn);
  double contraction = 1.0;
  for (std::size_t k = s; k < t; ++k) {
    const StepOperators op = step_operators(traj, k);
    product = op.transition * product;
    contraction *= op.contraction;
  }
  const Matrix P_t = diffusion::stacked_covariance(traj.state_at(t));
  const Matrix P_s = diffusion::stacked_covariance(traj.state_at(s));
  ProductBoundCheck out;
  const double norm = linalg::spectral_norm(product);
  out.lhs = norm * norm;
  out.rhs = contraction * linalg::spectral_norm(P_t) *
            linalg::spectral_norm(linalg::spd_inverse(P_s));
  return out;
}

LyapunovCheck check_lyapunov(const diffusion::Trajectory& traj, std::size_t s, std::size_t t,
                             const Vector& x_s) {
  if (!(t > s) || t > traj.length()) {
    throw ValidationError("lyapunov check: window must satisfy s < t <= length");
  }
  LyapunovCheck out;
  Vector x = x_s;
  double V = x.dot(linalg::spd_inverse(diffusion::stacked_covariance(traj.state_at(s))) * x);
  for (std::size_t k = s; k < t; ++k) {
    const StepOperators op = step_operators(traj, k);
    x = op.transition * x;
    const double V_next = x.dot(linalg::spd_inverse(op.P_next) * x);
    if (V > 0.0) {
      const double excess = (V_next - op.contraction * V) / V;
      out.worst_relative_excess =
          out.steps == 0 ? excess : std::max(out.worst_relative_excess, excess);
    }
    V = V_next;
    ++out.steps;
  }
  return out;
}

WindowSweep sweep_windows(const diffusion::Trajectory& traj, std::size_t s, const Vector& x_s) {
  if (s >= traj.length()) throw ValidationError("window sweep: start must precede the last step");
  const Matrix P_s = diffusion::stacked_covariance(traj.state_at(s));
  const double log_p_s_inv = std::log(linalg::spectral_norm(linalg::spd_inverse(P_s)));
  // The product and x are renormalised every step; their scales are carried in logs.
  Matrix product = Matrix::Identity(P_s.rows(), P_s.cols());
  double log_product = 0.0;
  double log_contraction = 0.0;
  Vector x = x_s;
  double V = x.dot(linalg::spd_inverse(P_s) * x);

  WindowSweep out;
  for (std::size_t k = s; k < traj.length(); ++k) {
    const StepOperators op = step_operators(traj, k);
    product = op.transition * product;
    const double norm = linalg::spectral_norm(product);
    log_contraction += std::log(op.contraction);
    const double log_lhs = 2.0 * (log_product + std::log(norm));
    const double log_rhs = log_contraction + std::log(linalg::spectral_norm(op.P_next)) + log_p_s_inv;
    out.worst_product_ratio = std::max(out.worst_product_ratio, std::exp(log_lhs - log_rhs));
    if (norm > 0.0) {
      product /= norm;
      log_product += std::log(norm);
    }
    ++out.windows;

    x = op.transition * x;
    const double V_next = x.dot(linalg::spd_inverse(op.P_next) * x);
    if (V > 0.0) {
      const double excess = (V_next - op.contraction * V) / V;
      out.lyapunov.worst_relative_excess =
          out.lyapunov.steps == 0 ? excess : std::max(out.lyapunov.worst_relative_excess, excess);
    }
    V = V_next;
    if (V > 0.0) {
      x /= std::sqrt(V);
      V = 1.0;
    }
    ++out.lyapunov.steps;
  }
  return out;
}

double max_inverse_norm_ratio(const diffusion::Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 0; k <= traj.length(); ++k) {
    for (const auto& s : traj.state_at(k).sensors) {
      const double q_inv = 1.0 / linalg::min_eigenvalue(s.Q);
      const double p_inv = 1.0 / linalg::min_eigenvalue(s.P);
      worst = std::max(worst, p_inv / q_inv);
    }
  }
  return worst;
}

double sup_trace(const diffusion::Trajectory& traj) {
  double best = 0.0;
  for (std::size_t k = 0; k <= traj.length(); ++k) {
    best = std::max(best, trace_of(traj.state_at(k)));
  }
  return best;
}

std::vector<double> contraction_sequence(const diffusion::Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.length());
  for (const auto& st : traj.steps) {
    double q_inv = 0.0, p_bar = 0.0;
    for (std::size_t i = 0; i < st.adapted.size(); ++i) {
      q_inv = std::max(q_inv, 1.0 / linalg::min_eigenvalue(traj.initial.sensors[i].Q));
      p_bar = std::max(p_bar, linalg::max_eigenvalue(st.adapted[i].P_bar));
    }
    out.push_back(1.0 / (1.0 + q_inv * p_bar));
  }
  return out;
}

}  // namespace dkf::diagnostics
