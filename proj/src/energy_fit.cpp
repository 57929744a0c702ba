#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "derd/energy_model.hpp"
#include "derd/kernels.hpp"

namespace derd {

EnergyProfileFit fitProfile(std::span<const FitSample> samples, const FitOptions& options) {
  const auto& names = parameterNames();
  constexpr std::size_t m = kNumEnergyParameters;

  std::array<std::optional<double>, m> fixed{};
  for (const auto& [name, value] : options.fixed) fixed[parameterIndex(name)] = value;

  const std::size_t n = samples.size();
  if (n == 0) throw FitError("fit_profile: no samples", {});

  std::vector<ParameterVector> rows;
  rows.reserve(n);
  std::vector<double> target(n);
  for (std::size_t r = 0; r < n; ++r) {
    samples[r].counts.validate();
    if (!std::isfinite(samples[r].measured_j))
      throw ModelError("fit_profile: non-finite measured energy");
    rows.push_back(designRow(samples[r].counts));
    double t = samples[r].measured_j;
    for (std::size_t c = 0; c < m; ++c)
      if (fixed[c]) t -= *fixed[c] * rows.back()[c];
    target[r] = t;
  }

  EnergyProfileFit fit;
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < m; ++c) {
    if (fixed[c]) continue;
    ++fit.free_parameters;
    const bool allZero =
        std::all_of(rows.begin(), rows.end(), [c](const auto& row) { return row[c] == 0.0; });
    if (allZero)
      fit.unidentifiable.push_back(names[c]);
    else
      active.push_back(c);
  }

  std::vector<std::string> activeNames;
  for (std::size_t c : active) activeNames.push_back(names[c]);
  if (n < active.size())
    throw FitError("fit_profile: underdetermined system (" + std::to_string(n) +
                       " samples for " + std::to_string(active.size()) + " free parameters)",
                   activeNames);

  ParameterVector params{};
  for (std::size_t c = 0; c < m; ++c)
    if (fixed[c]) params[c] = *fixed[c];

  const std::size_t k = active.size();
  if (k > 0) {
    // Column scaling keeps the normal matrix well conditioned when counts
    // differ by orders of magnitude (n_coeff against n_slice, say).
    std::vector<double> scale(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (const auto& row : rows) s += row[active[a]] * row[active[a]];
      scale[a] = std::sqrt(s);
    }
    std::vector<double> xs(n * k);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t a = 0; a < k; ++a) xs[r * k + a] = rows[r][active[a]] / scale[a];

    const auto ne = kernels::normalEquations(xs, target, n, k);
    const Eigen::MatrixXd gram =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            ne.gram.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    const Eigen::VectorXd rhs =
        Eigen::Map<const Eigen::VectorXd>(ne.rhs.data(), static_cast<Eigen::Index>(k));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd ev = eig.eigenvalues();  // ascending
    const double evMax = ev(ev.size() - 1);
    const double cutoff = options.rank_tolerance * evMax;
    std::set<std::string> deficient;
    fit.rank = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) > cutoff) {
        ++fit.rank;
        continue;
      }
      const Eigen::VectorXd v = eig.eigenvectors().col(i);
      for (Eigen::Index a = 0; a < v.size(); ++a)
        if (std::abs(v(a)) > 0.1) deficient.insert(activeNames[static_cast<std::size_t>(a)]);
    }
    fit.condition_number = ev(0) > 0.0 ? evMax / ev(0) : std::numeric_limits<double>::infinity();
    if (fit.rank < k)
      throw FitError("fit_profile: rank-deficient system (rank " + std::to_string(fit.rank) +
                         " of " + std::to_string(k) + ")",
                     {deficient.begin(), deficient.end()});

    Eigen::VectorXd z = gram.ldlt().solve(rhs);

    if (options.non_negative && (z.array() < 0.0).any()) {
      // Projected Gauss-Seidel on the normal equations.
      z = z.cwiseMax(0.0);
      for (int sweep = 0; sweep < options.max_projection_sweeps; ++sweep) {
        double maxStep = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          const double g = gram.row(i).dot(z) - rhs(i);
          const double next = std::max(0.0, z(i) - g / gram(i, i));
          maxStep = std::max(maxStep, std::abs(next - z(i)));
          z(i) = next;
        }
        fit.projection_sweeps = sweep + 1;
        if (maxStep <= 1e-15 * std::max(1.0, z.cwiseAbs().maxCoeff())) break;
      }
    }

    for (std::size_t a = 0; a < k; ++a)
      params[active[a]] = z(static_cast<Eigen::Index>(a)) / scale[a];
  }

  fit.profile = fromParameters(params, "fitted", "least-squares calibration");
  fit.residuals.reserve(n);
  fit.relative_errors.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double est = estimateDecodingEnergy(fit.profile, samples[r].counts);
    const double measured = samples[r].measured_j;
    fit.residuals.push_back(est - measured);
    if (measured > 0.0)
      fit.relative_errors.emplace_back(std::abs(est - measured) / measured);
    else
      fit.relative_errors.emplace_back(std::nullopt);
  }
  return fit;
}

}  // namespace derd
