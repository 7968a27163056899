#include "gmclab/sampler.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace gmclab {
namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

int row_of_height(const HyperbolicMesh& mesh, double y) {
  for (std::size_t r = 0; r < mesh.yedge.size(); ++r)
    if (std::fabs(mesh.yedge[r] - y) <= 1e-12 * std::max(1.0, y)) return static_cast<int>(r);
  throw std::invalid_argument("strip cut does not lie on a mesh row edge");
}

}  // namespace

struct FieldSampler::Impl {
  int nx = 0, ny = 0, nfreq = 0;
  // stencil spectra per profile, per row (empty for rows without support)
  struct Profile {
    std::vector<std::vector<std::complex<double>>> stencil_fft;  // ny entries
    std::vector<std::vector<double>> stencil;                    // circular, length nx
    std::vector<int> strip_begin;  // strip s covers rows [strip_begin[s], strip_begin[s+1])
    std::vector<std::vector<double>> fields;  // per strip, length nx
  };
  std::vector<Profile> profiles;
  std::vector<double> row_sd;  // sqrt(cell area) per row

  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  fftw_plan fwd = nullptr, inv = nullptr;
  std::vector<std::vector<std::complex<double>>> noise_fft;  // per row

  ~Impl() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    if (rbuf) fftw_free(rbuf);
    if (cbuf) fftw_free(cbuf);
  }
};

FieldSampler::FieldSampler(const HyperbolicMesh& mesh,
                           const std::vector<ProfileRequest>& profiles)
    : mesh_(mesh), impl_(new Impl) {
  mesh_.validate();
  if (!mesh_.periodic) throw std::invalid_argument("strip sampler needs a periodic mesh");
  Impl& im = *impl_;
  im.nx = mesh_.nx;
  im.ny = mesh_.ny();
  im.nfreq = im.nx / 2 + 1;
  im.row_sd.resize(im.ny);
  for (int r = 0; r < im.ny; ++r) im.row_sd[r] = std::sqrt(mesh_.cell_area(r));

  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    im.rbuf = fftw_alloc_real(im.nx);
    im.cbuf = fftw_alloc_complex(im.nfreq);
    im.fwd = fftw_plan_dft_r2c_1d(im.nx, im.rbuf, im.cbuf, FFTW_ESTIMATE);
    im.inv = fftw_plan_dft_c2r_1d(im.nx, im.cbuf, im.rbuf, FFTW_ESTIMATE);
  }
  im.noise_fft.assign(im.ny, std::vector<std::complex<double>>(im.nfreq));

  const double h = mesh_.h();
  const double per = mesh_.period();
  im.profiles.resize(profiles.size());
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const RegionSpec& reg = profiles[p].region;
    auto& prof = im.profiles[p];
    prof.stencil.assign(im.ny, {});
    prof.stencil_fft.assign(im.ny, {});
    // strip boundaries as row indices
    std::vector<int> bounds{0, im.ny};
    for (double c : profiles[p].cut_heights) bounds.push_back(row_of_height(mesh_, c));
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    prof.strip_begin = bounds;
    prof.fields.assign(prof.strip_begin.size() - 1, std::vector<double>(im.nx, 0.0));

    const double center = mesh_.x_center(0);
    for (int r = 0; r < im.ny; ++r) {
      if (mesh_.yedge[r + 1] <= reg.lower || mesh_.yedge[r] >= reg.top()) continue;
      double ycap = std::min(mesh_.yedge[r + 1], reg.top());
      double wmax = reg.width(ycap);
      if (wmax <= 0.0) continue;
      if (wmax >= per) throw std::invalid_argument("region wider than mesh period");
      double inv_area = 1.0 / mesh_.cell_area(r);
      std::vector<double> st(im.nx, 0.0);
      int k_lo = static_cast<int>(std::floor((center - 0.5 * wmax - mesh_.x_lo) / h)) - 1;
      int k_hi = static_cast<int>(std::ceil((center + 0.5 * wmax - mesh_.x_lo) / h)) + 1;
      if (k_hi - k_lo + 1 > im.nx) {
        k_lo = 0;
        k_hi = im.nx - 1;
      }
      RegionSpec shifted = reg;
      for (int k = k_lo; k <= k_hi; ++k) {
        double x0 = mesh_.x_lo + k * h;
        double w = 0.0;
        for (int rep = -1; rep <= 1; ++rep) {
          shifted.shift = reg.shift + center + rep * per;
          w += box_overlap_area(shifted, x0, x0 + h, mesh_.yedge[r], mesh_.yedge[r + 1]);
        }
        if (w <= 0.0) continue;
        int base = k % im.nx;
        if (base < 0) base += im.nx;
        st[base] += w * inv_area;
      }
      // spectrum of the stencil (relative offsets: entry k is cell k vs center 0)
      std::memcpy(im.rbuf, st.data(), sizeof(double) * im.nx);
      fftw_execute(im.fwd);
      auto& sf = prof.stencil_fft[r];
      sf.resize(im.nfreq);
      std::memcpy(sf.data(), im.cbuf, sizeof(fftw_complex) * im.nfreq);
      prof.stencil[r] = std::move(st);
    }
  }
}

FieldSampler::~FieldSampler() = default;

void FieldSampler::sample(std::uint64_t seed) {
  Impl& im = *impl_;
  Rng rng(seed);
  // identical draw order to sample_white_noise: row-major
  for (int r = 0; r < im.ny; ++r) {
    double sd = im.row_sd[r];
    for (int j = 0; j < im.nx; ++j) im.rbuf[j] = sd * rng.normal();
    fftw_execute(im.fwd);
    std::memcpy(im.noise_fft[r].data(), im.cbuf, sizeof(fftw_complex) * im.nfreq);
  }
  const double scale = 1.0 / im.nx;
  for (auto& prof : im.profiles) {
    for (std::size_t s = 0; s + 1 < prof.strip_begin.size(); ++s) {
      std::vector<std::complex<double>> acc(im.nfreq, {0.0, 0.0});
      bool any = false;
      for (int r = prof.strip_begin[s]; r < prof.strip_begin[s + 1]; ++r) {
        if (prof.stencil_fft[r].empty()) continue;
        any = true;
        const auto& sf = prof.stencil_fft[r];
        const auto& nf = im.noise_fft[r];
        // field(j) = sum_k st(k) W(j+k): spectrum = conj(st_hat) * W_hat
        for (int f = 0; f < im.nfreq; ++f) acc[f] += std::conj(sf[f]) * nf[f];
      }
      auto& out = prof.fields[s];
      if (!any) {
        std::fill(out.begin(), out.end(), 0.0);
        continue;
      }
      std::memcpy(im.cbuf, acc.data(), sizeof(fftw_complex) * im.nfreq);
      fftw_execute(im.inv);
      for (int j = 0; j < im.nx; ++j) out[j] = im.rbuf[j] * scale;
    }
  }
}

int FieldSampler::strips(int profile) const {
  return static_cast<int>(impl_->profiles.at(profile).strip_begin.size()) - 1;
}

const std::vector<double>& FieldSampler::strip_field(int profile, int strip) const {
  return impl_->profiles.at(profile).fields.at(strip);
}

void FieldSampler::accumulate(int profile, int strip_lo, int strip_hi,
                              std::vector<double>& out) const {
  const auto& prof = impl_->profiles.at(profile);
  out.assign(impl_->nx, 0.0);
  for (int s = strip_lo; s < strip_hi; ++s)
    for (int j = 0; j < impl_->nx; ++j) out[j] += prof.fields[s][j];
}

double FieldSampler::model_covariance(int p, int lo_p, int hi_p, int q, int lo_q, int hi_q,
                                      int offset_cells) const {
  const Impl& im = *impl_;
  const auto& pp = im.profiles.at(p);
  const auto& pq = im.profiles.at(q);
  int row_lo_p = pp.strip_begin.at(lo_p), row_hi_p = pp.strip_begin.at(hi_p);
  int row_lo_q = pq.strip_begin.at(lo_q), row_hi_q = pq.strip_begin.at(hi_q);
  int lo = std::max(row_lo_p, row_lo_q), hi = std::min(row_hi_p, row_hi_q);
  double acc = 0.0;
  for (int r = lo; r < hi; ++r) {
    if (pp.stencil[r].empty() || pq.stencil[r].empty()) continue;
    double area = mesh_.cell_area(r);
    const auto& a = pp.stencil[r];
    const auto& b = pq.stencil[r];
    double s = 0.0;
    for (int k = 0; k < im.nx; ++k) {
      int kk = (k + offset_cells) % im.nx;
      if (kk < 0) kk += im.nx;
      s += a[k] * b[kk];
    }
    acc += area * s;
  }
  return acc;
}

}  // namespace gmclab
