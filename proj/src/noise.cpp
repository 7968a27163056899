#include "gmclab/noise.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gmclab {

HyperbolicMesh make_geometric_mesh(double x_lo, double x_hi, int nx, double y_lo,
                                   double y_hi, int ny, bool periodic) {
  HyperbolicMesh m;
  m.x_lo = x_lo;
  m.x_hi = x_hi;
  m.nx = nx;
  m.periodic = periodic;
  m.yedge.resize(ny + 1);
  double ratio = std::log(y_hi / y_lo);
  for (int r = 0; r <= ny; ++r) m.yedge[r] = y_lo * std::exp(ratio * r / ny);
  m.yedge.front() = y_lo;
  m.yedge.back() = y_hi;
  m.validate();
  return m;
}

HyperbolicMesh make_cut_mesh(double x_lo, double x_hi, int nx, double y_lo, double y_hi,
                             const std::vector<double>& cuts, int rows_per_octave,
                             bool periodic) {
  std::vector<double> marks{y_lo, y_hi};
  for (double c : cuts)
    if (c > y_lo && c < y_hi) marks.push_back(c);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  HyperbolicMesh m;
  m.x_lo = x_lo;
  m.x_hi = x_hi;
  m.nx = nx;
  m.periodic = periodic;
  m.yedge.push_back(marks.front());
  const double ln2 = std::log(2.0);
  for (std::size_t s = 0; s + 1 < marks.size(); ++s) {
    double a = marks[s], b = marks[s + 1];
    int rows = std::max(1, static_cast<int>(std::ceil(std::log(b / a) / ln2 * rows_per_octave)));
    double step = std::log(b / a) / rows;
    for (int r = 1; r <= rows; ++r) m.yedge.push_back(a * std::exp(step * r));
    m.yedge.back() = b;
  }
  m.validate();
  return m;
}

NoiseRealization sample_white_noise(const HyperbolicMesh& mesh, std::uint64_t seed) {
  mesh.validate();
  NoiseRealization n;
  n.mesh = mesh;
  n.seed = seed;
  n.values.resize(static_cast<std::size_t>(mesh.ny()) * mesh.nx);
  Rng rng(seed);
  std::size_t idx = 0;
  for (int r = 0; r < mesh.ny(); ++r) {
    double sd = std::sqrt(mesh.cell_area(r));
    for (int j = 0; j < mesh.nx; ++j) n.values[idx++] = sd * rng.normal();
  }
  return n;
}

ShiftWeights::ShiftWeights(const HyperbolicMesh& mesh, const RegionSpec& region,
                           const std::vector<double>& shifts)
    : mesh_(mesh) {
  mesh_.validate();
  const double h = mesh_.h();
  const double per = mesh_.period();
  entries_.resize(shifts.size());
  for (std::size_t si = 0; si < shifts.size(); ++si) {
    Entry& e = entries_[si];
    for (int r = 0; r < mesh_.ny(); ++r) {
      if (mesh_.yedge[r + 1] <= region.lower || mesh_.yedge[r] >= region.top()) continue;
      double ycap = std::min(mesh_.yedge[r + 1], region.top());
      double wmax = region.width(ycap);
      if (wmax <= 0.0) continue;
      double inv_area = 1.0 / mesh_.cell_area(r);
      RegionSpec shifted = region;
      shifted.shift = region.shift + shifts[si];
      // raw column span (may run outside [0,nx) when periodic)
      int k_lo = static_cast<int>(std::floor((shifted.shift - 0.5 * wmax - mesh_.x_lo) / h)) - 1;
      int k_hi = static_cast<int>(std::ceil((shifted.shift + 0.5 * wmax - mesh_.x_lo) / h)) + 1;
      if (!mesh_.periodic) {
        if (k_hi < 0 || k_lo >= mesh_.nx)
          throw std::invalid_argument("mesh extent does not cover region");
        k_lo = std::max(k_lo, 0);
        k_hi = std::min(k_hi, mesh_.nx - 1);
      } else if (k_hi - k_lo + 1 > mesh_.nx) {
        // one full period of columns; wider sections would double count
        if (wmax >= per) throw std::invalid_argument("region wider than mesh period");
        k_lo = 0;
        k_hi = mesh_.nx - 1;
        // evaluate each base column against both adjacent copies below
      }
      for (int k = k_lo; k <= k_hi; ++k) {
        double x0 = mesh_.x_lo + k * h;
        double w = 0.0;
        if (mesh_.periodic) {
          // overlap against every period copy of the section that can reach
          for (int rep = -1; rep <= 1; ++rep) {
            RegionSpec copy = shifted;
            copy.shift += rep * per;
            w += box_overlap_area(copy, x0, x0 + h, mesh_.yedge[r], mesh_.yedge[r + 1]);
          }
        } else {
          w = box_overlap_area(shifted, x0, x0 + h, mesh_.yedge[r], mesh_.yedge[r + 1]);
        }
        if (w <= 0.0) continue;
        int base = k;
        if (mesh_.periodic) {
          base = k % mesh_.nx;
          if (base < 0) base += mesh_.nx;
        }
        e.row.push_back(r);
        e.col.push_back(base);
        e.w.push_back(w * inv_area);
      }
    }
  }
}

std::vector<double> ShiftWeights::apply(const NoiseRealization& noise) const {
  std::vector<double> out(entries_.size(), 0.0);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& e = entries_[i];
    double acc = 0.0;
    for (std::size_t t = 0; t < e.w.size(); ++t) acc += e.w[t] * noise.at(e.row[t], e.col[t]);
    out[i] = acc;
  }
  return out;
}

double ShiftWeights::covariance(std::size_t i, std::size_t j) const {
  const Entry& a = entries_.at(i);
  const Entry& b = entries_.at(j);
  // join on (row, col); both entry lists are small
  double acc = 0.0;
  for (std::size_t t = 0; t < a.w.size(); ++t) {
    for (std::size_t u = 0; u < b.w.size(); ++u) {
      if (a.row[t] == b.row[u] && a.col[t] == b.col[u])
        acc += mesh_.cell_area(a.row[t]) * a.w[t] * b.w[u];
    }
  }
  return acc;
}

std::vector<double> field_from_noise(const NoiseRealization& noise, const RegionSpec& region,
                                     const std::vector<double>& shifts) {
  ShiftWeights w(noise.mesh, region, shifts);
  return w.apply(noise);
}

std::vector<std::vector<double>> sample_exact(const CovKernel& kernel,
                                              const std::vector<double>& points,
                                              std::size_t draws, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  if (kernel.family == KernelFamily::ULambda) {
    auto [lo, hi] = std::minmax_element(points.begin(), points.end());
    if (*hi - *lo > kernel.delta)
      throw std::domain_error("kernel not positive definite on this extent");
  }
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = eval_kernel(kernel, points[i] - points[j]);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  double maxdiag = cov.diagonal().maxCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool ok = false;
  for (double jitter : {0.0, 1e-12 * maxdiag, 1e-9 * maxdiag}) {
    Eigen::MatrixXd trial = cov;
    if (jitter > 0.0) trial.diagonal().array() += jitter;
    llt.compute(trial);
    if (llt.info() == Eigen::Success) {
      ok = true;
      break;
    }
  }
  if (!ok) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "covariance factorization failed; smallest eigenvalue ~ "
        << es.eigenvalues().minCoeff();
    throw std::runtime_error(msg.str());
  }
  Eigen::MatrixXd L = llt.matrixL();
  Rng rng(seed);
  std::vector<std::vector<double>> out(draws, std::vector<double>(n));
  Eigen::VectorXd z(n);
  for (std::size_t d = 0; d < draws; ++d) {
    for (std::size_t i = 0; i < n; ++i) z(i) = rng.normal();
    Eigen::VectorXd x = L * z;
    for (std::size_t i = 0; i < n; ++i) out[d][i] = x(i);
  }
  return out;
}

}  // namespace gmclab
